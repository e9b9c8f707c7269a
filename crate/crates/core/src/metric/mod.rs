//! Strategy spaces: points, distances, covering oracles, nets and packings.

mod finite;
mod interval;
mod shape;
mod tree;

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use finite::FiniteMetric;
pub use shape::Shape;
pub use tree::{FatSpec, LeafSet, TreeMetric};

/// Default bound on the size of nets and packings.
pub const DEFAULT_NET_CAP: usize = 1 << 20;

/// Upper bound on the number of left-factor slices a product oracle scans.
const PRODUCT_SLICE_CAP: u128 = 4096;

/// Relative slack accepted when checking that a witness lies in a closed
/// region; only affects points on the region boundary.
const REGION_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Interval(f64),
    Tree(Vec<u64>),
    Finite(usize),
    Product(Box<Point>, Box<Point>),
}

impl Point {
    pub fn product(left: Point, right: Point) -> Point {
        Point::Product(Box::new(left), Box::new(right))
    }

    fn rank(&self) -> u8 {
        match self {
            Point::Interval(_) => 0,
            Point::Tree(_) => 1,
            Point::Finite(_) => 2,
            Point::Product(..) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Point::Interval(_) => "interval",
            Point::Tree(_) => "tree",
            Point::Finite(_) => "finite",
            Point::Product(..) => "product",
        }
    }

    /// Total lexicographic order used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        match (self, other) {
            (Point::Interval(a), Point::Interval(b)) => a.total_cmp(b),
            (Point::Tree(a), Point::Tree(b)) => a.cmp(b),
            (Point::Finite(a), Point::Finite(b)) => a.cmp(b),
            (Point::Product(a1, a2), Point::Product(b1, b2)) => {
                a1.lex_cmp(b1).then_with(|| a2.lex_cmp(b2))
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Point::Interval(x) => write!(f, "{x}"),
            Point::Tree(path) => {
                write!(f, "[")?;
                for (i, c) in path.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
            Point::Finite(i) => write!(f, "#{i}"),
            Point::Product(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

/// Open ball `{x : L(x, center) < radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be >= 0, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coverage {
    Covered,
    Uncovered(Point),
}

impl Coverage {
    pub fn is_covered(&self) -> bool {
        matches!(self, Coverage::Covered)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub radius: f64,
    pub points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricDescriptor {
    /// `[0, 1]` with `L(x, y) = |x - y|^(1/d)`.
    IntervalLd {
        d: f64,
    },
    FiniteExplicit {
        matrix: FiniteMetric,
    },
    WeightedTree {
        tree: TreeMetric,
    },
    /// Sum distance on a product of two spaces.
    Product {
        left: Box<MetricDescriptor>,
        right: Box<MetricDescriptor>,
    },
    /// Quasi-distance `f(L(u, v)) - f(0)`.
    Shaped {
        base: Box<MetricDescriptor>,
        shape: Shape,
    },
}

impl MetricDescriptor {
    pub fn interval(d: f64) -> Result<Self> {
        if !(d.is_finite() && d >= 1.0) {
            return Err(Error::InvalidMetric(format!(
                "interval exponent d must be >= 1, got {d}"
            )));
        }
        Ok(MetricDescriptor::IntervalLd { d })
    }

    pub fn finite(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Ok(MetricDescriptor::FiniteExplicit {
            matrix: FiniteMetric::new(matrix)?,
        })
    }

    pub fn tree(d: f64, depth: usize, branching: u64, fat: FatSpec) -> Result<Self> {
        Ok(MetricDescriptor::WeightedTree {
            tree: TreeMetric::new(d, depth, branching, fat)?,
        })
    }

    pub fn product(left: MetricDescriptor, right: MetricDescriptor) -> Self {
        MetricDescriptor::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn shaped(base: MetricDescriptor, shape: Shape) -> Self {
        MetricDescriptor::Shaped {
            base: Box::new(base),
            shape,
        }
    }

    /// Check parameters that deserialization does not.
    pub fn validate(&self) -> Result<()> {
        match self {
            MetricDescriptor::IntervalLd { d } => Self::interval(*d).map(|_| ()),
            MetricDescriptor::FiniteExplicit { .. } | MetricDescriptor::WeightedTree { .. } => {
                Ok(())
            }
            MetricDescriptor::Product { left, right } => left.validate().and(right.validate()),
            MetricDescriptor::Shaped { base, shape } => {
                Shape::new(shape.offset, shape.scale, shape.exponent)?;
                base.validate()
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MetricDescriptor::IntervalLd { .. } => "interval",
            MetricDescriptor::FiniteExplicit { .. } => "finite",
            MetricDescriptor::WeightedTree { .. } => "tree",
            MetricDescriptor::Product { .. } => "product",
            MetricDescriptor::Shaped { base, .. } => base.kind(),
        }
    }

    fn mismatch(&self, p: &Point) -> Error {
        Error::KindMismatch {
            expected: self.kind(),
            got: p.kind().to_string(),
        }
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (MetricDescriptor::IntervalLd { .. }, Point::Interval(x)) => {
                if (0.0..=1.0).contains(x) {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint(format!(
                        "interval point {x} outside [0, 1]"
                    )))
                }
            }
            (MetricDescriptor::FiniteExplicit { matrix }, Point::Finite(i)) => {
                if *i < matrix.len() {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint(format!(
                        "finite index {i} out of range for {} points",
                        matrix.len()
                    )))
                }
            }
            (MetricDescriptor::WeightedTree { tree }, Point::Tree(path)) => {
                tree.validate_path(path)
            }
            (MetricDescriptor::Product { left, right }, Point::Product(a, b)) => {
                left.validate_point(a)?;
                right.validate_point(b)
            }
            (MetricDescriptor::Shaped { base, .. }, _) => base.validate_point(p),
            _ => Err(self.mismatch(p)),
        }
    }

    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        Ok(self.dist(p, q))
    }

    /// Distance between points already known to be valid.
    pub(crate) fn dist(&self, p: &Point, q: &Point) -> f64 {
        match (self, p, q) {
            (MetricDescriptor::IntervalLd { d }, Point::Interval(x), Point::Interval(y)) => {
                interval::distance(*d, *x, *y)
            }
            (MetricDescriptor::FiniteExplicit { matrix }, Point::Finite(i), Point::Finite(j)) => {
                matrix.distance(*i, *j)
            }
            (MetricDescriptor::WeightedTree { tree }, Point::Tree(a), Point::Tree(b)) => {
                tree.distance(a, b)
            }
            (
                MetricDescriptor::Product { left, right },
                Point::Product(a1, a2),
                Point::Product(b1, b2),
            ) => left.dist(a1, b1) + right.dist(a2, b2),
            (MetricDescriptor::Shaped { base, shape }, _, _) => shape.excess(base.dist(p, q)),
            _ => panic!(
                "distance between {} and {} points on a {} metric",
                p.kind(),
                q.kind(),
                self.kind()
            ),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            MetricDescriptor::IntervalLd { .. } => 1.0,
            MetricDescriptor::FiniteExplicit { matrix } => matrix.diameter(),
            MetricDescriptor::WeightedTree { tree } => tree.weight(0),
            MetricDescriptor::Product { left, right } => left.diameter() + right.diameter(),
            MetricDescriptor::Shaped { base, shape } => shape.excess(base.diameter()),
        }
    }

    /// True when the distance is only a quasi-distance.
    pub fn is_quasi(&self) -> bool {
        match self {
            MetricDescriptor::Shaped { .. } => true,
            MetricDescriptor::Product { left, right } => left.is_quasi() || right.is_quasi(),
            _ => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            MetricDescriptor::FiniteExplicit { matrix } => matrix.is_empty(),
            MetricDescriptor::Product { left, right } => left.is_empty() || right.is_empty(),
            MetricDescriptor::Shaped { base, .. } => base.is_empty(),
            _ => false,
        }
    }

    /// Covering oracle over open balls.
    pub fn covering_query(&self, balls: &[Ball]) -> Result<Coverage> {
        self.covering_query_within(balls, None)
    }

    /// Covering oracle restricted to the closed ball `region`: reports a
    /// point of the region outside every ball, if one exists.
    pub fn covering_query_within(&self, balls: &[Ball], region: Option<&Ball>) -> Result<Coverage> {
        for b in balls {
            self.validate_point(&b.center)?;
        }
        if let Some(r) = region {
            self.validate_point(&r.center)?;
        }
        let refs: Vec<(&Point, f64)> = balls.iter().map(|b| (&b.center, b.radius)).collect();
        let region = region.map(|r| (&r.center, r.radius));
        Ok(match self.uncovered(&refs, region) {
            Some(w) => Coverage::Uncovered(w),
            None => Coverage::Covered,
        })
    }

    /// Core oracle on validated input. Every returned witness is at
    /// distance `>= r` from each ball center.
    pub(crate) fn uncovered(
        &self,
        balls: &[(&Point, f64)],
        region: Option<(&Point, f64)>,
    ) -> Option<Point> {
        if self.is_empty() {
            return None;
        }
        if let Some((_, rho)) = region {
            if !(rho >= 0.0) {
                return None;
            }
        }
        match self {
            MetricDescriptor::IntervalLd { d } => interval_uncovered(*d, balls, region),
            MetricDescriptor::FiniteExplicit { matrix } => (0..matrix.len()).find_map(|i| {
                let inside =
                    region.is_none_or(|(c, rho)| matrix.distance(i, finite_index(c)) <= rho);
                let free = balls
                    .iter()
                    .all(|&(c, r)| matrix.distance(i, finite_index(c)) >= r);
                (inside && free).then_some(Point::Finite(i))
            }),
            MetricDescriptor::WeightedTree { tree } => {
                tree_uncovered(tree, balls, region, LeafSet::All).map(Point::Tree)
            }
            MetricDescriptor::Product { left, right } => {
                product_uncovered(left, right, balls, region)
            }
            MetricDescriptor::Shaped { base, shape } => {
                let mapped: Vec<(&Point, f64)> = balls
                    .iter()
                    .map(|&(c, r)| (c, shape.base_radius(r)))
                    .collect();
                let region = region.map(|(c, rho)| (c, shape.base_radius(rho)));
                let w = base.uncovered(&mapped, region)?;
                balls
                    .iter()
                    .all(|&(c, r)| self.dist(&w, c) >= r)
                    .then_some(w)
            }
        }
    }

    /// Covering oracle for a subset of tree leaves, used by the level
    /// oracles of fat decompositions.
    pub(crate) fn uncovered_in_set(&self, balls: &[(&Point, f64)], set: LeafSet) -> Option<Point> {
        match self {
            MetricDescriptor::WeightedTree { tree } => {
                tree_uncovered(tree, balls, None, set).map(Point::Tree)
            }
            _ if set == LeafSet::All => self.uncovered(balls, None),
            _ => None,
        }
    }

    /// Greedy net: add covering-oracle witnesses until radius-`delta`
    /// balls around the chosen points cover the space.
    pub fn build_net(&self, delta: f64, cap: usize) -> Result<Net> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "net radius must be > 0, got {delta}"
            )));
        }
        if let MetricDescriptor::WeightedTree { tree } = self {
            // the greedy leftmost-witness net has one leaf per subtree at the ball level
            let level = tree.open_ball_level(delta).unwrap_or(tree.depth());
            if tree.nodes_on_level(level) > cap as u128 {
                return Err(Error::NetCapExceeded { radius: delta, cap });
            }
            let mut points = Vec::new();
            tree.visit_level(level, &mut |leaf| points.push(Point::Tree(leaf)));
            return Ok(Net {
                radius: delta,
                points,
            });
        }
        let mut points: Vec<Point> = Vec::new();
        loop {
            let balls: Vec<(&Point, f64)> = points.iter().map(|p| (p, delta)).collect();
            let Some(w) = self.uncovered(&balls, None) else {
                break;
            };
            if points.len() >= cap {
                return Err(Error::NetCapExceeded { radius: delta, cap });
            }
            points.push(w);
        }
        Ok(Net {
            radius: delta,
            points,
        })
    }

    /// Centers of a maximal family of disjoint open `delta`-balls, with
    /// centers in the closed ball `within` (the whole space if absent).
    pub fn max_packing(&self, delta: f64, within: Option<&Ball>) -> Result<Vec<Point>> {
        let centers = self.packing_limited(delta, within, DEFAULT_NET_CAP + 1)?;
        if centers.len() > DEFAULT_NET_CAP {
            return Err(Error::NetCapExceeded {
                radius: delta,
                cap: DEFAULT_NET_CAP,
            });
        }
        Ok(centers)
    }

    /// Greedy packing that stops after `limit` centers.
    pub fn packing_limited(
        &self,
        delta: f64,
        within: Option<&Ball>,
        limit: usize,
    ) -> Result<Vec<Point>> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "packing radius must be > 0, got {delta}"
            )));
        }
        if let Some(b) = within {
            self.validate_point(&b.center)?;
        }
        let region = within.map(|b| (&b.center, b.radius));
        let mut centers: Vec<Point> = Vec::new();
        while centers.len() < limit {
            let balls: Vec<(&Point, f64)> = centers.iter().map(|p| (p, 2.0 * delta)).collect();
            let Some(w) = self.uncovered(&balls, region) else {
                break;
            };
            centers.push(w);
        }
        Ok(centers)
    }

    /// Greedy upper-bound surrogate for the number of diameter-`r` sets
    /// needed to cover the space: the size of a net of radius `r / 2`.
    pub fn covering_number(&self, r: f64) -> Result<usize> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "covering scale must be > 0, got {r}"
            )));
        }
        Ok(self.build_net(r / 2.0, DEFAULT_NET_CAP)?.points.len())
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            MetricDescriptor::IntervalLd { .. } => Point::Interval(rng.random::<f64>()),
            MetricDescriptor::FiniteExplicit { matrix } => {
                Point::Finite(rng.random_range(0..matrix.len()))
            }
            MetricDescriptor::WeightedTree { tree } => Point::Tree(tree.sample_leaf(rng)),
            MetricDescriptor::Product { left, right } => {
                Point::product(left.sample_point(rng), right.sample_point(rng))
            }
            MetricDescriptor::Shaped { base, .. } => base.sample_point(rng),
        }
    }

    /// Random point at distance at most about `scale` from `p`.
    pub fn sample_near<R: Rng + ?Sized>(&self, p: &Point, scale: f64, rng: &mut R) -> Point {
        match (self, p) {
            (MetricDescriptor::IntervalLd { d }, Point::Interval(x)) => {
                let h = interval::half_width(*d, scale).min(1.0);
                let lo = (x - h).max(0.0);
                let hi = (x + h).min(1.0);
                Point::Interval(if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    *x
                })
            }
            (MetricDescriptor::FiniteExplicit { matrix }, Point::Finite(i)) => {
                let near: Vec<usize> = (0..matrix.len())
                    .filter(|&j| matrix.distance(*i, j) <= scale)
                    .collect();
                Point::Finite(near[rng.random_range(0..near.len())])
            }
            (MetricDescriptor::WeightedTree { tree }, Point::Tree(path)) => {
                Point::Tree(tree.sample_near(path, scale, rng))
            }
            (MetricDescriptor::Product { left, right }, Point::Product(a, b)) => Point::product(
                left.sample_near(a, scale / 2.0, rng),
                right.sample_near(b, scale / 2.0, rng),
            ),
            (MetricDescriptor::Shaped { base, shape }, _) => {
                base.sample_near(p, shape.base_radius(scale), rng)
            }
            _ => panic!("sample_near on mismatched point kind"),
        }
    }

    /// Number of points [`visit_grid`](Self::visit_grid) produces.
    pub fn grid_size(&self, spacing: f64) -> u128 {
        match self {
            MetricDescriptor::IntervalLd { d } => interval_grid_steps(*d, spacing) as u128 + 1,
            MetricDescriptor::FiniteExplicit { matrix } => matrix.len() as u128,
            MetricDescriptor::WeightedTree { tree } => {
                tree.nodes_on_level(tree.closed_ball_level(spacing))
            }
            MetricDescriptor::Product { left, right } => left
                .grid_size(spacing / 2.0)
                .saturating_mul(right.grid_size(spacing / 2.0)),
            MetricDescriptor::Shaped { base, shape } => base.grid_size(shape.base_radius(spacing)),
        }
    }

    /// Visit a finite grid such that every point of the space is within
    /// `spacing` of some grid point.
    pub fn visit_grid(&self, spacing: f64, f: &mut dyn FnMut(Point)) {
        match self {
            MetricDescriptor::IntervalLd { d } => {
                let k = interval_grid_steps(*d, spacing);
                for i in 0..=k {
                    f(Point::Interval(i as f64 / k as f64));
                }
            }
            MetricDescriptor::FiniteExplicit { matrix } => {
                (0..matrix.len()).for_each(|i| f(Point::Finite(i)))
            }
            MetricDescriptor::WeightedTree { tree } => tree
                .visit_level(tree.closed_ball_level(spacing), &mut |leaf| {
                    f(Point::Tree(leaf))
                }),
            MetricDescriptor::Product { left, right } => {
                let mut rights = Vec::new();
                right.visit_grid(spacing / 2.0, &mut |q| rights.push(q));
                left.visit_grid(spacing / 2.0, &mut |p| {
                    for q in &rights {
                        f(Point::product(p.clone(), q.clone()));
                    }
                });
            }
            MetricDescriptor::Shaped { base, shape } => {
                base.visit_grid(shape.base_radius(spacing), f)
            }
        }
    }

    pub fn covering_dimension(&self) -> f64 {
        match self {
            MetricDescriptor::IntervalLd { d } => *d,
            MetricDescriptor::FiniteExplicit { .. } => 0.0,
            MetricDescriptor::WeightedTree { tree } => tree.covering_dimension(),
            MetricDescriptor::Product { left, right } => {
                left.covering_dimension() + right.covering_dimension()
            }
            MetricDescriptor::Shaped { base, shape } => base.covering_dimension() / shape.exponent,
        }
    }

    /// Infimum of the covering dimension over nonempty open subsets.
    pub fn min_covering_dimension(&self) -> f64 {
        match self {
            MetricDescriptor::IntervalLd { d } => *d,
            MetricDescriptor::FiniteExplicit { .. } => 0.0,
            MetricDescriptor::WeightedTree { tree } => tree.min_covering_dimension(),
            MetricDescriptor::Product { left, right } => {
                left.min_covering_dimension() + right.min_covering_dimension()
            }
            MetricDescriptor::Shaped { base, shape } => {
                base.min_covering_dimension() / shape.exponent
            }
        }
    }
}

fn finite_index(p: &Point) -> usize {
    match p {
        Point::Finite(i) => *i,
        _ => panic!("expected a finite point"),
    }
}

fn interval_coord(p: &Point) -> f64 {
    match p {
        Point::Interval(x) => *x,
        _ => panic!("expected an interval point"),
    }
}

fn interval_grid_steps(d: f64, spacing: f64) -> u64 {
    let h = interval::half_width(d, spacing.max(0.0));
    if h >= 1.0 {
        1
    } else {
        (1.0 / h).ceil().max(1.0) as u64
    }
}

fn within_region(d: f64, w: f64, region: Option<(&Point, f64)>) -> bool {
    match region {
        None => true,
        Some((c, rho)) => interval::distance(d, w, interval_coord(c)) <= rho * (1.0 + REGION_SLACK),
    }
}

fn interval_uncovered(
    d: f64,
    balls: &[(&Point, f64)],
    region: Option<(&Point, f64)>,
) -> Option<Point> {
    let (lo, hi) = match region {
        None => (0.0, 1.0),
        Some((c, rho)) => {
            let c = interval_coord(c);
            let h = interval::half_width(d, rho);
            ((c - h).max(0.0), (c + h).min(1.0))
        }
    };
    let intervals: Vec<(f64, f64)> = balls
        .iter()
        .filter(|&&(_, r)| r > 0.0)
        .map(|&(c, r)| {
            let c = interval_coord(c);
            let h = interval::half_width(d, r);
            (c - h, c + h)
        })
        .filter(|&(a, b)| b > lo && a < hi)
        .collect();
    let gaps = interval::uncovered_gaps(intervals, lo, hi);
    interval::witness_candidates(&gaps)
        .into_iter()
        .find_map(|w| {
            let free = balls
                .iter()
                .all(|&(c, r)| interval::distance(d, w, interval_coord(c)) >= r);
            (free && within_region(d, w, region)).then_some(Point::Interval(w))
        })
}

fn tree_uncovered(
    tree: &TreeMetric,
    balls: &[(&Point, f64)],
    region: Option<(&Point, f64)>,
    set: LeafSet,
) -> Option<Vec<u64>> {
    let paths: Vec<(&[u64], f64)> = balls
        .iter()
        .map(|&(c, r)| match c {
            Point::Tree(p) => (p.as_slice(), r),
            _ => panic!("expected a tree point"),
        })
        .collect();
    let region = region.map(|(c, rho)| match c {
        Point::Tree(p) => (p.as_slice(), rho),
        _ => panic!("expected a tree point"),
    });
    tree.find_uncovered(&paths, region, set)
}

/// Approximate product oracle: scans a grid of left-factor slices, fine
/// relative to the smallest radius involved, and queries the right factor
/// exactly on each slice. Witnesses are always genuine; a `Covered` answer
/// can miss uncovered pockets narrower than the slice spacing.
fn product_uncovered(
    left: &MetricDescriptor,
    right: &MetricDescriptor,
    balls: &[(&Point, f64)],
    region: Option<(&Point, f64)>,
) -> Option<Point> {
    let split = |p: &Point| -> (Point, Point) {
        match p {
            Point::Product(a, b) => ((**a).clone(), (**b).clone()),
            _ => panic!("expected a product point"),
        }
    };
    let parts: Vec<((Point, Point), f64)> = balls.iter().map(|&(c, r)| (split(c), r)).collect();
    let region_parts = region.map(|(c, rho)| (split(c), rho));

    let mut scale = parts
        .iter()
        .map(|p| p.1)
        .filter(|&r| r > 0.0)
        .fold(left.diameter().max(1e-300), f64::min);
    if let Some((_, rho)) = &region_parts {
        if *rho > 0.0 {
            scale = scale.min(*rho);
        }
    }
    let mut spacing = scale / 8.0;
    while left.grid_size(spacing) > PRODUCT_SLICE_CAP {
        spacing *= 1.25;
    }
    let mut slices = Vec::new();
    if let Some(((cl, _), _)) = &region_parts {
        slices.push(cl.clone());
    }
    left.visit_grid(spacing, &mut |p| slices.push(p));
    slices.extend(parts.iter().map(|((cl, _), _)| cl.clone()));

    for x in slices {
        let right_region = match &region_parts {
            Some(((cl, cr), rho)) => {
                let rem = rho - left.dist(&x, cl);
                if rem < 0.0 {
                    continue;
                }
                Some((cr, rem))
            }
            None => None,
        };
        let right_balls: Vec<(&Point, f64)> = parts
            .iter()
            .filter_map(|((cl, cr), r)| {
                let rem = r - left.dist(&x, cl);
                (rem > 0.0).then_some((cr, rem))
            })
            .collect();
        if let Some(y) = right.uncovered(&right_balls, right_region) {
            let w = Point::product(x, y);
            let free = parts.iter().all(|((cl, cr), r)| {
                let Point::Product(a, b) = &w else {
                    unreachable!()
                };
                left.dist(a, cl) + right.dist(b, cr) >= *r
            });
            if free {
                return Some(w);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn ball(c: Point, r: f64) -> Ball {
        Ball::new(c, r).unwrap()
    }

    #[test]
    fn interval_distances() {
        let m1 = MetricDescriptor::interval(1.0).unwrap();
        let m2 = MetricDescriptor::interval(2.0).unwrap();
        let d = m1
            .distance(&Point::Interval(0.2), &Point::Interval(0.5))
            .unwrap();
        assert!((d - 0.3).abs() < 1e-15);
        assert_eq!(
            m2.distance(&Point::Interval(0.0), &Point::Interval(0.25))
                .unwrap(),
            0.5
        );
    }

    #[test]
    fn tree_distance_at_level_two() {
        let m = MetricDescriptor::tree(1.0, 6, 2, FatSpec::None).unwrap();
        let a = Point::Tree(vec![0, 1, 0, 0, 0, 0]);
        let b = Point::Tree(vec![0, 1, 1, 1, 0, 0]);
        assert_eq!(m.distance(&a, &b).unwrap(), 0.25);
    }

    #[test]
    fn kind_mismatch_is_typed() {
        let m = MetricDescriptor::interval(1.0).unwrap();
        let err = m
            .distance(&Point::Finite(0), &Point::Interval(0.1))
            .unwrap_err();
        assert!(matches!(err, Error::KindMismatch { .. }));
        assert!(matches!(
            m.validate_point(&Point::Interval(1.5)).unwrap_err(),
            Error::InvalidPoint(_)
        ));
    }

    #[test]
    fn interval_oracle_examples() {
        let m = MetricDescriptor::interval(1.0).unwrap();
        assert_eq!(
            m.covering_query(&[ball(Point::Interval(0.5), 0.6)])
                .unwrap(),
            Coverage::Covered
        );
        let two = [
            ball(Point::Interval(0.0), 0.1),
            ball(Point::Interval(1.0), 0.1),
        ];
        assert_eq!(
            m.covering_query(&two).unwrap(),
            Coverage::Uncovered(Point::Interval(0.5))
        );
        assert!(!m.covering_query(&[]).unwrap().is_covered());
    }

    #[test]
    fn open_ball_boundary_is_uncovered() {
        let m = MetricDescriptor::interval(1.0).unwrap();
        let c = m
            .covering_query(&[ball(Point::Interval(0.5), 0.5)])
            .unwrap();
        match c {
            Coverage::Uncovered(Point::Interval(w)) => assert!(w == 0.0 || w == 1.0),
            other => panic!("expected an endpoint witness, got {other:?}"),
        }
    }

    #[test]
    fn empty_finite_space_is_covered() {
        let m = MetricDescriptor::finite(vec![]).unwrap();
        assert!(m.covering_query(&[]).unwrap().is_covered());
    }

    #[test]
    fn net_examples() {
        let m = MetricDescriptor::interval(1.0).unwrap();
        assert!(m.build_net(0.125, 100).unwrap().points.len() <= 9);
        assert_eq!(m.build_net(2.0, 100).unwrap().points.len(), 1);
        let f = MetricDescriptor::finite(FiniteMetric::uniform(3, 1.0).unwrap().matrix().to_vec())
            .unwrap();
        assert_eq!(f.build_net(0.5, 100).unwrap().points.len(), 3);
        assert!(matches!(
            m.build_net(0.001, 10),
            Err(Error::NetCapExceeded { .. })
        ));
    }

    #[test]
    fn packing_examples() {
        let m = MetricDescriptor::interval(1.0).unwrap();
        let p = m.max_packing(0.25, None).unwrap();
        // {0, 0.5, 1} is the greedy answer; {0, 1} would be maximal too
        assert!((2..=3).contains(&p.len()));
        for i in 0..p.len() {
            for j in 0..i {
                assert!(m.dist(&p[i], &p[j]) >= 0.5);
            }
        }
        let doubled: Vec<Ball> = p.iter().map(|c| ball(c.clone(), 0.5)).collect();
        assert!(m.covering_query(&doubled).unwrap().is_covered());
        assert_eq!(m.max_packing(0.6, None).unwrap().len(), 1);
        let single = MetricDescriptor::finite(vec![vec![0.0]]).unwrap();
        assert_eq!(
            single.max_packing(0.1, None).unwrap(),
            vec![Point::Finite(0)]
        );
    }

    #[test]
    fn covering_number_examples() {
        let m = MetricDescriptor::interval(1.0).unwrap();
        assert!(m.covering_number(0.25).unwrap() <= 9);
        assert_eq!(m.covering_number(2.0).unwrap(), 1);
        let t = MetricDescriptor::tree(1.0, 10, 2, FatSpec::None).unwrap();
        assert!(t.covering_number(0.125).unwrap() <= 32);
    }

    #[test]
    fn region_query_stays_in_region() {
        let m = MetricDescriptor::interval(1.0).unwrap();
        let region = ball(Point::Interval(0.5), 0.1);
        let c = m
            .covering_query_within(&[ball(Point::Interval(0.5), 0.05)], Some(&region))
            .unwrap();
        let Coverage::Uncovered(w) = c else {
            panic!("expected witness")
        };
        let dw = m.dist(&w, &Point::Interval(0.5));
        assert!((0.05..=0.1 + 1e-12).contains(&dw));
    }

    #[test]
    fn product_oracle_finds_gap_in_square() {
        let i = MetricDescriptor::interval(1.0).unwrap();
        let m = MetricDescriptor::product(i.clone(), i);
        let centre = Point::product(Point::Interval(0.5), Point::Interval(0.5));
        assert!(m
            .covering_query(&[ball(centre.clone(), 1.01)])
            .unwrap()
            .is_covered());
        let c = m.covering_query(&[ball(centre.clone(), 0.9)]).unwrap();
        let Coverage::Uncovered(w) = c else {
            panic!("corner is uncovered")
        };
        assert!(m.dist(&w, &centre) >= 0.9);
    }

    #[test]
    fn shaped_oracle_transforms_radius() {
        let base = MetricDescriptor::interval(1.0).unwrap();
        let m = MetricDescriptor::shaped(base, Shape::power(0.5).unwrap());
        // L_f < 0.5 means |x - c| < 0.25
        let c = m
            .covering_query(&[ball(Point::Interval(0.5), 0.5)])
            .unwrap();
        let Coverage::Uncovered(w) = c else {
            panic!("expected witness")
        };
        assert!(m.dist(&w, &Point::Interval(0.5)) >= 0.5);
        assert!(m.is_quasi());
    }

    #[test]
    fn grid_spacing_is_respected() {
        let i = MetricDescriptor::interval(2.0).unwrap();
        let mut pts = Vec::new();
        i.visit_grid(0.1, &mut |p| pts.push(p));
        assert_eq!(pts.len() as u128, i.grid_size(0.1));
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = i.sample_point(&mut rng);
            let best = pts
                .iter()
                .map(|p| i.dist(p, &x))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 0.1 + 1e-12);
        }
    }
}
