//! `[0, 1]` under `L(x, y) = |x - y|^(1/d)`.
//!
//! A ball of radius `r` is the Euclidean interval `(c - r^d, c + r^d)`, so
//! covering queries reduce to a sweep over sorted intervals.

/// Euclidean half-width of a ball with metric radius `r`.
pub(crate) fn half_width(d: f64, r: f64) -> f64 {
    if r.is_infinite() {
        f64::INFINITY
    } else {
        r.powf(d)
    }
}

pub(crate) fn distance(d: f64, x: f64, y: f64) -> f64 {
    let diff = (x - y).abs();
    if d == 1.0 {
        diff
    } else {
        diff.powf(1.0 / d)
    }
}

/// Closed gaps of `[lo, hi]` left uncovered by the union of the open
/// intervals `(left, right)`.
pub(crate) fn uncovered_gaps(mut intervals: Vec<(f64, f64)>, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    intervals.retain(|(a, b)| b > a);
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    // every point of [lo, frontier) is covered or already listed as a gap
    let mut frontier = lo;
    for (a, b) in intervals {
        if frontier > hi {
            break;
        }
        if a < frontier {
            frontier = frontier.max(b);
            continue;
        }
        let end = a.min(hi);
        gaps.push((frontier, end));
        if a > hi {
            frontier = f64::INFINITY;
            break;
        }
        frontier = b;
    }
    if frontier <= hi {
        gaps.push((frontier, hi));
    }
    gaps
}

/// Candidate witnesses ordered by preference: midpoints of gaps, widest
/// first, ties broken towards the left.
pub(crate) fn witness_candidates(gaps: &[(f64, f64)]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&i, &j| {
        let wi = gaps[i].1 - gaps[i].0;
        let wj = gaps[j].1 - gaps[j].0;
        wj.total_cmp(&wi).then(i.cmp(&j))
    });
    order
        .into_iter()
        .map(|i| 0.5 * (gaps[i].0 + gaps[i].1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_interval_spanning_leaves_no_gap() {
        assert!(uncovered_gaps(vec![(-0.1, 1.1)], 0.0, 1.0).is_empty());
    }

    #[test]
    fn open_endpoints_are_gaps() {
        let gaps = uncovered_gaps(vec![(0.0, 1.0)], 0.0, 1.0);
        assert_eq!(gaps, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn touching_intervals_leave_the_touch_point() {
        let gaps = uncovered_gaps(vec![(-1.0, 0.5), (0.5, 2.0)], 0.0, 1.0);
        assert_eq!(gaps, vec![(0.5, 0.5)]);
    }

    #[test]
    fn middle_gap_and_witness() {
        let gaps = uncovered_gaps(vec![(0.9, 1.1), (-0.1, 0.1)], 0.0, 1.0);
        assert_eq!(gaps, vec![(0.1, 0.9)]);
        assert_eq!(witness_candidates(&gaps)[0], 0.5);
    }

    #[test]
    fn nested_intervals_do_not_shrink_frontier() {
        let gaps = uncovered_gaps(vec![(-0.5, 0.8), (0.1, 0.2)], 0.0, 1.0);
        assert_eq!(gaps, vec![(0.8, 1.0)]);
    }
}
