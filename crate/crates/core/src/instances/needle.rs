//! Randomized multi-scale needle-in-haystack payoffs.
//!
//! `mu = 1/3 + sum_i f_{B_i}` where `B_1 ⊃ B_2 ⊃ ...` is a random chain of
//! balls and `f_B(x) = min(r - L(x, c), r/2)` inside `B(c, r)`, zero outside.
//! Each level packs `ceil(r^-b)` disjoint balls into the plateau
//! `{L(x, c_parent) <= r_parent / 2}` of the previous ball and picks one
//! uniformly, so the summed bumps never overlap on a slope.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Ball, MetricDescriptor, Point};

/// Radii shrink by this factor while the packing is too small.
const SHRINK: f64 = 0.8;
/// Radii below this are indistinguishable from rounding error on `[0, 1]`.
const MIN_RADIUS: f64 = 1e-13;
/// Largest per-level packing the generator attempts.
const MAX_BALLS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeedleTowerSpec {
    pub a: f64,
    pub b: f64,
    pub depth_cap: usize,
    pub host: MetricDescriptor,
    pub seed: u64,
}

/// One realized ball of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeedleLevel {
    pub center: Point,
    pub radius: f64,
    /// Number of disjoint candidate balls packed at this level.
    pub count: usize,
    /// Which packed ball was drawn.
    pub chosen: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeedleTower {
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub host: MetricDescriptor,
    pub levels: Vec<NeedleLevel>,
    /// Supremum of the truncated payoff, attained at the deepest center.
    pub mu_star: f64,
    /// Bound on what the untruncated levels below the last one could add.
    pub tail_bound: f64,
    pub witness: Point,
}

impl NeedleTower {
    pub fn mu(&self, x: &Point) -> f64 {
        let mut value = 1.0 / 3.0;
        for level in &self.levels {
            let dist = self.host.dist(x, &level.center);
            if dist >= level.radius {
                break;
            }
            value += (level.radius - dist).min(level.radius / 2.0);
        }
        value
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `sum_{j >= i} r_j / 2` for 1-based level `i`: the regret of every
    /// point of the previous level's plateau that lies outside `B_i`.
    pub fn gap_at(&self, level: usize) -> f64 {
        self.levels[level - 1..]
            .iter()
            .map(|l| l.radius / 2.0)
            .sum()
    }

    pub fn ball(&self, level: usize) -> Ball {
        let l = &self.levels[level - 1];
        Ball {
            center: l.center.clone(),
            radius: l.radius,
        }
    }
}

pub fn generate_needle_tower(spec: &NeedleTowerSpec) -> Result<NeedleTower> {
    let host = &spec.host;
    if !(spec.a > 0.0 && spec.a < spec.b) {
        return Err(Error::InvalidPayoff(format!(
            "needle tower needs 0 < a < b, got a={}, b={}",
            spec.a, spec.b
        )));
    }
    let mincov = host.min_covering_dimension();
    if !(spec.b < mincov) {
        return Err(Error::InvalidPayoff(format!(
            "needle tower needs b < {mincov} (the host's smallest covering dimension of an open set), got b={}",
            spec.b
        )));
    }
    if host.is_empty() {
        return Err(Error::InvalidPayoff(
            "needle tower host space is empty".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut levels: Vec<NeedleLevel> = Vec::with_capacity(spec.depth_cap);
    let mut parent_radius = host.diameter();
    for level in 1..=spec.depth_cap {
        let mut r = parent_radius / 8.0;
        let (centers, need) = loop {
            if r < MIN_RADIUS {
                return Err(Error::PackingInfeasible {
                    level,
                    reason: format!("radius fell below {MIN_RADIUS:e} before ceil(r^-b) balls fit"),
                });
            }
            let need = r.powf(-spec.b).ceil() as usize;
            if need > MAX_BALLS {
                return Err(Error::PackingInfeasible {
                    level,
                    reason: format!(
                        "needs {need} disjoint balls of radius {r:e}, above the limit {MAX_BALLS}"
                    ),
                });
            }
            let region = levels.last().map(|p: &NeedleLevel| Ball {
                center: p.center.clone(),
                radius: parent_radius / 2.0 - r,
            });
            let centers = host.packing_limited(r, region.as_ref(), need)?;
            if centers.len() >= need {
                break (centers, need);
            }
            r *= SHRINK;
        };
        let chosen = rng.random_range(0..need);
        log::debug!("needle level {level}: radius {r:e}, {need} balls, picked {chosen}");
        levels.push(NeedleLevel {
            center: centers[chosen].clone(),
            radius: r,
            count: need,
            chosen,
        });
        parent_radius = r;
    }
    let mu_star = 1.0 / 3.0 + levels.iter().map(|l| l.radius / 2.0).sum::<f64>();
    // later radii would satisfy r_{i+1} < r_i / 4
    let tail_bound = levels.last().map_or(0.0, |l| l.radius / 6.0);
    let witness = match levels.last() {
        Some(l) => l.center.clone(),
        None => host.uncovered(&[], None).expect("nonempty host"),
    };
    Ok(NeedleTower {
        a: spec.a,
        b: spec.b,
        seed: spec.seed,
        host: host.clone(),
        levels,
        mu_star,
        tail_bound,
        witness,
    })
}
