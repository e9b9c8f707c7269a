//! Bandit algorithms: phased UCB1, naive nets, zooming and quotas.

pub mod formulas;
pub mod quota;
pub mod radius;
pub mod ucb1;
pub mod zooming;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::metric::{Point, DEFAULT_NET_CAP};

pub use formulas::{
    chernoff_radius, index, max_reward_one_radius, naive_delta, scaled_standard_radius,
    standard_radius, ucb1_index,
};
pub use quota::{run_quota, FatDecomposition, LevelSet, QuotaParams, QuotaSnapshot};
pub use radius::{clamp_radius, RadiusRule};
pub use ucb1::{run_naive, run_ucb1_phased, Ucb1};
pub use zooming::{run_zooming, ArmRecord, PhaseState};

/// Hooks called while an algorithm runs. Only `on_play` is required.
pub trait Observer {
    /// Round `t` (global, 1-based) played `point` and saw `reward`.
    fn on_play(&mut self, t: u64, point: &Point, reward: f64);

    fn on_phase_start(&mut self, _phase: u32, _len: u64) {}

    /// Zooming state right after step 1, before the play.
    fn on_step1(&mut self, _inst: &ProblemInstance, _state: &PhaseState) {}

    /// Zooming state after arm `arm` was played and updated.
    fn on_update(&mut self, _inst: &ProblemInstance, _state: &PhaseState, _arm: usize) {}

    /// Quota state after activations, before the play.
    fn on_quota_round(&mut self, _inst: &ProblemInstance, _snapshot: &QuotaSnapshot<'_>) {}
}

/// Observer that ignores everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullObserver;

impl Observer for NullObserver {
    fn on_play(&mut self, _t: u64, _point: &Point, _reward: f64) {}
}

/// `(phase, length, rounds before it)` for phases of `2, 4, 8, ...` rounds,
/// the last one cut off at `horizon`.
pub fn phase_lengths(horizon: u64) -> Vec<(u32, u64, u64)> {
    let mut out = Vec::new();
    let mut start = 0u64;
    let mut phase = 1u32;
    while start < horizon {
        let full = 1u64.checked_shl(phase).unwrap_or(u64::MAX);
        let len = full.min(horizon - start);
        out.push((phase, len, start));
        start += len;
        phase += 1;
    }
    out
}

/// Which algorithm to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    /// UCB1 over all points of a finite space, restarted each phase.
    Ucb1Phased,
    Naive {
        d: f64,
        #[serde(default = "default_net_cap")]
        net_cap: usize,
    },
    Zooming {
        #[serde(default)]
        rule: RadiusRule,
    },
    Quota {
        d: f64,
        decomposition: FatDecomposition,
    },
}

fn default_net_cap() -> usize {
    DEFAULT_NET_CAP
}

impl AlgorithmConfig {
    pub fn naive(d: f64) -> Self {
        AlgorithmConfig::Naive {
            d,
            net_cap: DEFAULT_NET_CAP,
        }
    }

    pub fn zooming(rule: RadiusRule) -> Self {
        AlgorithmConfig::Zooming { rule }
    }

    pub fn name(&self) -> String {
        match self {
            AlgorithmConfig::Ucb1Phased => "ucb1_phased".into(),
            AlgorithmConfig::Naive { d, .. } => format!("naive(d={d})"),
            AlgorithmConfig::Zooming { rule } => format!("zooming({})", rule.name()),
            AlgorithmConfig::Quota { d, .. } => format!("quota(d={d})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmConfig::Ucb1Phased => Ok(()),
            AlgorithmConfig::Naive { d, net_cap } => {
                if !(*d >= 0.0 && d.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "naive d must be >= 0, got {d}"
                    )));
                }
                if *net_cap == 0 {
                    return Err(Error::InvalidParameter("net_cap must be positive".into()));
                }
                Ok(())
            }
            AlgorithmConfig::Zooming { rule } => rule.validate(),
            AlgorithmConfig::Quota { d, decomposition } => {
                if !(d.is_finite() && *d > decomposition.d_star) {
                    return Err(Error::InvalidParameter(format!(
                        "quota d = {d} must exceed d_star = {}",
                        decomposition.d_star
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Run `config` on `inst` for `horizon` rounds.
pub fn run<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    config: &AlgorithmConfig,
    horizon: u64,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Result<()> {
    config.validate()?;
    match config {
        AlgorithmConfig::Ucb1Phased => run_ucb1_phased(inst, horizon, rng, obs),
        AlgorithmConfig::Naive { d, net_cap } => run_naive(inst, *d, horizon, *net_cap, rng, obs),
        AlgorithmConfig::Zooming { rule } => run_zooming(inst, rule, horizon, rng, obs),
        AlgorithmConfig::Quota { d, decomposition } => {
            run_quota(inst, *d, decomposition, horizon, rng, obs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_schedule() {
        assert_eq!(phase_lengths(6), vec![(1, 2, 0), (2, 4, 2)]);
        assert_eq!(phase_lengths(7), vec![(1, 2, 0), (2, 4, 2), (3, 1, 6)]);
        assert_eq!(phase_lengths(1), vec![(1, 1, 0)]);
        assert!(phase_lengths(0).is_empty());
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let c = AlgorithmConfig::zooming(RadiusRule::max_reward_one());
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<AlgorithmConfig>(&s).unwrap(), c);
        assert!(AlgorithmConfig::naive(-1.0).validate().is_err());
        let n: AlgorithmConfig = serde_json::from_str(r#"{"kind":"naive","d":1.0}"#).unwrap();
        assert_eq!(n, AlgorithmConfig::naive(1.0));
    }
}
