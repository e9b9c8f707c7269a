use rand::Rng;
use serde::{Deserialize, Serialize};

use super::radius::RadiusRule;
use super::zooming::{activate, PhaseState};
use super::{phase_lengths, Observer};
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::metric::{FatSpec, LeafSet, MetricDescriptor, Point};

/// One set `S_i` of a fat decomposition, with its covering oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSet {
    Whole,
    /// A structured set of tree leaves.
    Leaves {
        set: LeafSet,
    },
    /// An explicit finite list.
    Points {
        points: Vec<Point>,
    },
}

impl LevelSet {
    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (LevelSet::Whole, _) => true,
            (LevelSet::Leaves { set }, Point::Tree(path)) => set.contains(path),
            (LevelSet::Leaves { .. }, _) => false,
            (LevelSet::Points { points }, _) => points.contains(p),
        }
    }

    fn uncovered(&self, metric: &MetricDescriptor, balls: &[(&Point, f64)]) -> Option<Point> {
        match self {
            LevelSet::Whole => metric.uncovered(balls, None),
            LevelSet::Leaves { set } => metric.uncovered_in_set(balls, *set),
            LevelSet::Points { points } => points
                .iter()
                .find(|p| balls.iter().all(|&(c, r)| metric.dist(p, c) >= r))
                .cloned(),
        }
    }
}

/// Nested sets `S_0 = X ⊃ S_1 ⊃ ... ⊃ S_k` of a `d_star`-fat
/// decomposition; `S_{k+1}` is empty and not stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FatDecomposition {
    pub levels: Vec<LevelSet>,
    pub d_star: f64,
}

impl FatDecomposition {
    /// Depth-1 decomposition `X ⊃ {fat part}` of a fat tree.
    pub fn for_fat_tree(metric: &MetricDescriptor) -> Result<Self> {
        let MetricDescriptor::WeightedTree { tree } = metric else {
            return Err(Error::InvalidParameter(
                "fat-tree decomposition needs a tree metric".into(),
            ));
        };
        let set = match tree.fat() {
            FatSpec::None => return Err(Error::InvalidParameter("tree has no fat part".into())),
            FatSpec::Leaf => LeafSet::FatLeaf,
            FatSpec::Subtree => LeafSet::FatSubtree,
        };
        Ok(Self {
            levels: vec![LevelSet::Whole, LevelSet::Leaves { set }],
            d_star: tree.min_covering_dimension(),
        })
    }

    /// Depth `k`, the number of proper nonempty subsets.
    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn validate(&self, metric: &MetricDescriptor) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.levels.len() < 2 {
            return bad("fat decomposition needs S_0 and at least one deeper set".into());
        }
        if self.levels[0] != LevelSet::Whole {
            return bad("fat decomposition must start with the whole space".into());
        }
        if !(self.d_star >= 0.0) {
            return bad(format!("d_star must be >= 0, got {}", self.d_star));
        }
        for (i, level) in self.levels.iter().enumerate() {
            match level {
                LevelSet::Leaves { .. }
                    if !matches!(metric, MetricDescriptor::WeightedTree { .. }) =>
                {
                    return bad(format!(
                        "level {i} is a leaf set but the metric is not a tree"
                    ));
                }
                LevelSet::Points { points } => {
                    if points.is_empty() {
                        return bad(format!("level {i} is empty"));
                    }
                    points.iter().try_for_each(|p| metric.validate_point(p))?;
                }
                _ => {}
            }
            // nesting, checked on the oracle's witnesses of the deeper set
            let Some(w) = level.uncovered(metric, &[]) else {
                return bad(format!("level {i} is empty"));
            };
            if let Some(j) = (0..i).find(|&j| !self.levels[j].contains(&w)) {
                return bad(format!("level {i} is not contained in level {j}"));
            }
        }
        Ok(())
    }
}

/// Per-phase quota parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuotaParams {
    pub rho: f64,
    pub c_rho: f64,
    /// `C_rho rho^-d`: the most pool members with radius `>= rho` allowed.
    pub quota: f64,
    /// Size bound for the initial net, `T^(d/(d+2)) / 2`.
    pub net_bound: f64,
}

impl QuotaParams {
    pub fn new(phase_len: u64, d: f64, k: usize) -> Self {
        let t = phase_len as f64;
        let rho = t.powf(-1.0 / (d + 2.0));
        let c_rho = 1.0 / (64.0 * k as f64 * (1.0 / rho).ln());
        let quota = c_rho * rho.powf(-d);
        let net_bound = 0.5 * t.powf(d / (d + 2.0));
        Self {
            rho,
            c_rho,
            quota,
            net_bound,
        }
    }
}

/// View of the quota algorithm's state passed to observers.
#[derive(Debug)]
pub struct QuotaSnapshot<'a> {
    pub state: &'a PhaseState,
    /// Pool of each arm; `None` for the initial net.
    pub pools: &'a [Option<usize>],
    pub params: QuotaParams,
}

impl QuotaSnapshot<'_> {
    /// `|{u in P_i : r_t(u) >= rho}|` for every pool.
    pub fn pool_loads(&self, levels: usize) -> Vec<usize> {
        let mut loads = vec![0; levels];
        for (arm, pool) in self.state.arms.iter().zip(self.pools) {
            if let Some(p) = pool {
                if arm.radius >= self.params.rho {
                    loads[*p] += 1;
                }
            }
        }
        loads
    }
}

/// Largest `2^-j`-net with at most `bound` points.
fn initial_net(metric: &MetricDescriptor, bound: f64) -> Result<Vec<Point>> {
    let mut best: Option<Vec<Point>> = None;
    for j in 0..60 {
        let cap = bound.floor() as usize;
        match metric.build_net((-(j as f64)).exp2(), cap) {
            Ok(net) => best = Some(net.points),
            Err(Error::NetCapExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(best.unwrap_or_else(|| {
        log::debug!("no 2^-j net fits under {bound:.3} points; starting from a single point");
        metric.uncovered(&[], None).into_iter().collect()
    }))
}

pub fn run_quota_phase<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    d: f64,
    decomposition: &FatDecomposition,
    phase: u32,
    len: u64,
    start: u64,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Result<PhaseState> {
    let rule = RadiusRule::standard();
    let metric = inst.metric();
    let k = decomposition.depth();
    let params = QuotaParams::new(1u64 << phase, d, k);
    if params.quota < 1.0 {
        log::info!(
            "quota phase {phase}: C_rho rho^-d = {:.4} < 1, no pool activations possible",
            params.quota
        );
    }
    let mut state = PhaseState::new(phase, len, start);
    obs.on_phase_start(phase, len);
    for p in initial_net(metric, params.net_bound)? {
        activate(&mut state, p, &rule)?;
    }
    let mut pools: Vec<Option<usize>> = vec![None; state.arms.len()];
    let levels = decomposition.levels.len();
    while state.round < len {
        loop {
            let loads = QuotaSnapshot {
                state: &state,
                pools: &pools,
                params,
            }
            .pool_loads(levels);
            let found = (0..levels).rev().find_map(|level| {
                if (loads[level] + 1) as f64 > params.quota {
                    return None;
                }
                let balls = state.balls();
                decomposition.levels[level]
                    .uncovered(metric, &balls)
                    .map(|w| (level, w))
            });
            let Some((level, w)) = found else { break };
            activate(&mut state, w, &rule)?;
            pools.push(Some(level));
        }
        obs.on_quota_round(
            inst,
            &QuotaSnapshot {
                state: &state,
                pools: &pools,
                params,
            },
        );
        let i = state.argmax_index().expect("initial net is nonempty");
        let reward = inst.sample_reward(&state.arms[i].strategy, rng);
        state.round += 1;
        state.play(i, reward, &rule)?;
        obs.on_play(start + state.round, &state.arms[i].strategy, reward);
    }
    Ok(state)
}

pub fn run_quota<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    d: f64,
    decomposition: &FatDecomposition,
    horizon: u64,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Result<()> {
    decomposition.validate(inst.metric())?;
    if !(d > decomposition.d_star) {
        return Err(Error::InvalidParameter(format!(
            "quota dimension {d} must exceed the decomposition's d_star {}",
            decomposition.d_star
        )));
    }
    for (phase, len, start) in phase_lengths(horizon) {
        run_quota_phase(inst, d, decomposition, phase, len, start, rng, obs)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_parameters() {
        // T = 2^12, d = 2, k = 1: rho = 1/8
        let q = QuotaParams::new(1 << 12, 2.0, 1);
        assert!((q.rho - 0.125).abs() < 1e-15);
        let c_rho = 1.0 / (64.0 * 8f64.ln());
        assert!((q.c_rho - c_rho).abs() < 1e-15);
        assert!((q.quota - c_rho * 64.0).abs() < 1e-12);
        assert!(q.quota < 1.0);
    }

    #[test]
    fn fat_leaf_decomposition_validates() {
        let m = MetricDescriptor::tree(1.0, 8, 2, FatSpec::Leaf).unwrap();
        let dec = FatDecomposition::for_fat_tree(&m).unwrap();
        dec.validate(&m).unwrap();
        assert_eq!(dec.depth(), 1);
        assert_eq!(dec.d_star, 1.0);
        assert!(dec.levels[1].contains(&Point::Tree(vec![0; 8])));
        assert!(!dec.levels[1].contains(&Point::Tree(vec![0, 1, 0, 0, 0, 0, 0, 0])));
    }

    #[test]
    fn initial_net_respects_bound() {
        let m = MetricDescriptor::tree(1.0, 8, 2, FatSpec::Leaf).unwrap();
        let net = initial_net(&m, 20.0).unwrap();
        assert_eq!(net.len(), 16);
        assert_eq!(initial_net(&m, 0.5).unwrap().len(), 1);
    }
}
