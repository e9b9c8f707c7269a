use rand::Rng;
use serde::Serialize;

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::metric::Point;

/// Outcome of a sampled Lipschitz check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    /// Largest `|mu(u) - mu(v)| - L(u, v)` seen, or for quasi-distances the
    /// largest `Delta(u) - L(u, v*)` against the optimal witness `v*`.
    pub max_violation: f64,
    pub worst_pair: Option<(Point, Point)>,
    pub pairs: usize,
    pub quasi: bool,
}

/// Sample `n_pairs` pairs and report the worst Lipschitz violation.
///
/// A third of the pairs are global, a third are local perturbations at
/// random geometric scales, and a third are drawn close to the payoff's
/// structural points (targets, peaks, needle centers).
pub fn verify_lipschitz<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    n_pairs: usize,
    rng: &mut R,
) -> LipschitzReport {
    let metric = inst.metric();
    let anchors = inst.payoff().anchors();
    let quasi = metric.is_quasi();
    let mut report = LipschitzReport {
        max_violation: f64::NEG_INFINITY,
        worst_pair: None,
        pairs: 0,
        quasi,
    };
    let scale = |rng: &mut R| (-(rng.random_range(1..=40) as f64)).exp2();
    for k in 0..n_pairs {
        let (u, v) = match k % 3 {
            0 => (metric.sample_point(rng), metric.sample_point(rng)),
            1 => {
                let u = metric.sample_point(rng);
                let s = scale(rng);
                let v = metric.sample_near(&u, s, rng);
                (u, v)
            }
            _ if !anchors.is_empty() => {
                let a = &anchors[rng.random_range(0..anchors.len())];
                let s = scale(rng);
                (metric.sample_near(a, s, rng), metric.sample_near(a, s, rng))
            }
            _ => {
                let u = metric.sample_point(rng);
                (u.clone(), metric.sample_near(&u, scale(rng), rng))
            }
        };
        let (violation, pair) = if quasi {
            let w = inst.optimal_witness();
            let slack = inst.delta(&u) - metric.dist(&u, w);
            (slack, (u, w.clone()))
        } else {
            let slack = (inst.mu_unchecked(&u) - inst.mu_unchecked(&v)).abs() - metric.dist(&u, &v);
            (slack, (u, v))
        };
        report.pairs += 1;
        if violation > report.max_violation {
            report.max_violation = violation;
            report.worst_pair = Some(pair);
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusCount {
    pub radius: f64,
    /// Grid points inside the shell `r/2 < Delta <= r`.
    pub shell_points: usize,
    /// Greedy cover size with closed balls of radius `r/16`.
    pub count: usize,
    /// Smallest `d` with `count <= C r^-d` at this radius.
    pub dimension: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    pub per_radius: Vec<RadiusCount>,
}

/// Default bound on the grid size per radius.
pub const DEFAULT_GRID_CAP: u128 = 1 << 26;

/// Brute-force estimate of the zooming dimension with constant `c`.
///
/// Each shell `X_r = {r/2 < Delta <= r}` is discretized by a grid of
/// spacing `r/32` and covered greedily by closed balls of radius `r/16`
/// (diameter at most `r/8`). The estimate is the smallest `d` such that the
/// cover size is at most `c r^-d` at every tested radius.
pub fn zooming_dimension_estimate(
    inst: &ProblemInstance,
    c: f64,
    radii: &[f64],
    grid_cap: u128,
) -> Result<DimensionEstimate> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dimension constant must be > 0, got {c}"
        )));
    }
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no radii to test".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidParameter("radii must lie in (0, 1)".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "radii must be strictly decreasing".into(),
        ));
    }
    let metric = inst.metric();
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let spacing = r / 32.0;
        let size = metric.grid_size(spacing);
        if size > grid_cap {
            return Err(Error::Discretization(format!(
                "radius {r:e} needs a grid of {size} points, above the cap of {grid_cap}"
            )));
        }
        let cover = r / 16.0;
        let mut centers: Vec<Point> = Vec::new();
        let mut shell_points = 0usize;
        metric.visit_grid(spacing, &mut |p| {
            let gap = inst.delta(&p);
            if !(gap > r / 2.0 && gap <= r) {
                return;
            }
            shell_points += 1;
            if !centers.iter().rev().any(|q| metric.dist(&p, q) <= cover) {
                centers.push(p);
            }
        });
        let count = centers.len();
        let dimension = if count as f64 <= c {
            0.0
        } else {
            (count as f64 / c).ln() / (1.0 / r).ln()
        };
        per_radius.push(RadiusCount {
            radius: r,
            shell_points,
            count,
            dimension,
        });
    }
    let dimension = per_radius.iter().map(|p| p.dimension).fold(0.0, f64::max);
    Ok(DimensionEstimate {
        dimension,
        per_radius,
    })
}
