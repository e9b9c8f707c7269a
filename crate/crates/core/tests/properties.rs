use proptest::prelude::*;

use metric_bandits::algorithms::{clamp_radius, naive_delta, standard_radius, RadiusRule};
use metric_bandits::metric::{FatSpec, FiniteMetric, MetricDescriptor, Point, Shape};

fn tree_point(depth: usize) -> impl Strategy<Value = Point> {
    proptest::collection::vec(0u64..3, depth).prop_map(Point::Tree)
}

fn metric_axioms(m: &MetricDescriptor, u: &Point, v: &Point, w: &Point) {
    let d = |a, b| m.distance(a, b).unwrap();
    assert_eq!(d(u, u), 0.0);
    assert!(d(u, v) >= 0.0);
    assert!((d(u, v) - d(v, u)).abs() <= 1e-15);
    assert!(d(u, v) <= m.diameter() + 1e-12);
    if !m.is_quasi() {
        assert!(d(u, w) <= d(u, v) + d(v, w) + 1e-12);
    }
}

proptest! {
    #[test]
    fn interval_is_a_metric(d in 1.0f64..4.0, x in 0.0f64..=1.0, y in 0.0f64..=1.0, z in 0.0f64..=1.0) {
        let m = MetricDescriptor::interval(d).unwrap();
        metric_axioms(&m, &Point::Interval(x), &Point::Interval(y), &Point::Interval(z));
    }

    #[test]
    fn tree_is_a_metric(u in tree_point(8), v in tree_point(8), w in tree_point(8), d in 0.3f64..2.0) {
        let m = MetricDescriptor::tree(d, 8, 3, FatSpec::None).unwrap();
        metric_axioms(&m, &u, &v, &w);
    }

    #[test]
    fn product_is_a_metric(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0,
                           x in 0.0f64..=1.0, y in 0.0f64..=1.0, z in 0.0f64..=1.0) {
        let m = MetricDescriptor::product(
            MetricDescriptor::interval(1.0).unwrap(),
            MetricDescriptor::interval(2.0).unwrap(),
        );
        let p = |l, r| Point::product(Point::Interval(l), Point::Interval(r));
        metric_axioms(&m, &p(a, x), &p(b, y), &p(c, z));
    }

    #[test]
    fn finite_line_is_a_metric(i in 0usize..7, j in 0usize..7, k in 0usize..7) {
        let m = MetricDescriptor::FiniteExplicit { matrix: FiniteMetric::line(7, 0.1).unwrap() };
        metric_axioms(&m, &Point::Finite(i), &Point::Finite(j), &Point::Finite(k));
    }

    #[test]
    fn shaped_distance_is_symmetric(e in 0.2f64..3.0, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let m = MetricDescriptor::shaped(MetricDescriptor::interval(1.0).unwrap(), Shape::power(e).unwrap());
        metric_axioms(&m, &Point::Interval(x), &Point::Interval(y), &Point::Interval(x));
    }

    #[test]
    fn clamp_keeps_the_contract(prev in 1e-6f64..10.0, raw in 0.0f64..20.0) {
        let r = clamp_radius(prev, raw);
        prop_assert!(r <= prev);
        prop_assert!(r >= 0.75 * prev);
    }

    #[test]
    fn clamped_rules_stay_in_contract(
        rule in prop_oneof![
            Just(RadiusRule::standard()),
            Just(RadiusRule::max_reward_one()),
            Just(RadiusRule::PointMass { c: 1.0 }),
            Just(RadiusRule::Jump { c: 1.0 }),
            Just(RadiusRule::HeavyTailed { a: 1.0 / 9.0, c: 1.0 }),
        ],
        phase in 1u32..12,
        rewards in proptest::collection::vec(0.0f64..=1.0, 1..200),
    ) {
        // one arm played every round
        let mut prev = rule.raw(phase, 0, 0.0, 1).unwrap();
        let mut sum = 0.0;
        for (k, x) in rewards.iter().enumerate() {
            sum += x;
            let n = k as u64 + 1;
            let next = clamp_radius(prev, rule.raw(phase, n, sum / n as f64, n + 1).unwrap());
            if prev.is_finite() {
                prop_assert!(next <= prev && next >= 0.75 * prev);
            }
            prev = next;
        }
    }

    #[test]
    fn standard_radius_decreases_in_plays(phase in 1u32..30, n in 0u64..100_000) {
        prop_assert!(standard_radius(phase, n + 1) < standard_radius(phase, n));
        prop_assert!(standard_radius(phase + 1, n) > standard_radius(phase, n));
    }

    #[test]
    fn naive_scale_is_in_unit_interval(t in 1u64..(1 << 40), d in 0.0f64..8.0) {
        let delta = naive_delta(t, d);
        prop_assert!(delta > 0.0 && delta <= 1.0);
        prop_assert!(naive_delta(t.saturating_mul(2), d) <= delta);
    }

    #[test]
    fn nets_cover(delta in 0.05f64..0.9, d in 1.0f64..2.0) {
        let m = MetricDescriptor::interval(d).unwrap();
        let net = m.build_net(delta, 1 << 20).unwrap();
        let balls: Vec<_> = net
            .points
            .iter()
            .map(|p| metric_bandits::metric::Ball::new(p.clone(), delta).unwrap())
            .collect();
        prop_assert!(m.covering_query(&balls).unwrap().is_covered());
        for (i, p) in net.points.iter().enumerate() {
            for q in &net.points[..i] {
                prop_assert!(m.distance(p, q).unwrap() >= delta - 1e-12);
            }
        }
    }
}
