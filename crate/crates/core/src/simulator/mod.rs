//! Experiments: regret accounting, replication, exponent fits and
//! invariant monitors.

mod fit;
mod monitors;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{self, AlgorithmConfig, Observer, PhaseState, QuotaSnapshot};
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::metric::Point;

pub use fit::{fit_exponent, ExponentFit, DEFAULT_WINDOW_FRACTION};
pub use monitors::{
    chernoff_frequency, monitor_clean_invariants, monitor_clean_phases, monitor_quota,
    CleanMonitor, CleanReport, PhaseCheck, QuotaMonitor, QuotaReport,
};

/// The RNG every run is driven by.
pub fn run_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Checkpoint rounds: `ceil(1.25^j)` for `j = 0, 1, ...`, deduplicated,
/// plus `horizon` itself.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut x = 1.0f64;
    loop {
        let t = x.ceil() as u64;
        if t >= horizon {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        x *= 1.25;
    }
    if horizon > 0 {
        out.push(horizon);
    }
    out
}

/// One round of a full-resolution trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayRecord {
    pub t: u64,
    pub point: Point,
    pub reward: f64,
}

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub horizon: u64,
    pub seed: u64,
    /// `(t, R(t))` on the checkpoint grid.
    pub checkpoints: Vec<(u64, f64)>,
    /// Every round, when requested.
    pub records: Option<Vec<PlayRecord>>,
    /// Sum of realized rewards.
    pub realized_reward: f64,
}

impl RunTrace {
    pub fn final_regret(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.1)
    }
}

struct Recorder<'a> {
    inst: &'a ProblemInstance,
    grid: Vec<u64>,
    next: usize,
    regret: f64,
    realized: f64,
    checkpoints: Vec<(u64, f64)>,
    records: Option<Vec<PlayRecord>>,
    extra: &'a mut dyn Observer,
}

impl Observer for Recorder<'_> {
    fn on_play(&mut self, t: u64, point: &Point, reward: f64) {
        self.regret += self.inst.delta(point);
        self.realized += reward;
        if let Some(r) = &mut self.records {
            r.push(PlayRecord {
                t,
                point: point.clone(),
                reward,
            });
        }
        if self.grid.get(self.next) == Some(&t) {
            self.checkpoints.push((t, self.regret));
            self.next += 1;
        }
        self.extra.on_play(t, point, reward);
    }

    fn on_phase_start(&mut self, phase: u32, len: u64) {
        self.extra.on_phase_start(phase, len);
    }

    fn on_step1(&mut self, inst: &ProblemInstance, state: &PhaseState) {
        self.extra.on_step1(inst, state);
    }

    fn on_update(&mut self, inst: &ProblemInstance, state: &PhaseState, arm: usize) {
        self.extra.on_update(inst, state, arm);
    }

    fn on_quota_round(&mut self, inst: &ProblemInstance, snapshot: &QuotaSnapshot<'_>) {
        self.extra.on_quota_round(inst, snapshot);
    }
}

/// Run one experiment, keeping every round when `record` is set and
/// forwarding all hooks to `obs`.
pub fn run_observed(
    inst: &ProblemInstance,
    config: &AlgorithmConfig,
    horizon: u64,
    seed: u64,
    record: bool,
    obs: &mut dyn Observer,
) -> Result<RunTrace> {
    if horizon < 2 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be >= 2, got {horizon}"
        )));
    }
    let mut rec = Recorder {
        inst,
        grid: checkpoints(horizon),
        next: 0,
        regret: 0.0,
        realized: 0.0,
        checkpoints: Vec::new(),
        records: record.then(Vec::new),
        extra: obs,
    };
    let mut rng = run_rng(seed);
    algorithms::run(inst, config, horizon, &mut rng, &mut rec)?;
    debug_assert_eq!(rec.next, rec.grid.len());
    Ok(RunTrace {
        horizon,
        seed,
        checkpoints: rec.checkpoints,
        records: rec.records,
        realized_reward: rec.realized,
    })
}

/// Deterministic in `(inst, config, horizon, seed)`.
pub fn run_experiment(
    inst: &ProblemInstance,
    config: &AlgorithmConfig,
    horizon: u64,
    seed: u64,
) -> Result<RunTrace> {
    run_observed(
        inst,
        config,
        horizon,
        seed,
        false,
        &mut algorithms::NullObserver,
    )
}

/// One checkpoint of a replicated curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: u64,
    pub mean: f64,
    /// Standard error of the mean across replications.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub points: Vec<CurvePoint>,
    pub replications: usize,
    /// `R(T)` of each seed, in seed order.
    pub final_regrets: Vec<f64>,
}

impl RegretCurve {
    /// Aggregate traces sharing a checkpoint grid.
    pub fn from_traces(traces: &[RunTrace]) -> Result<Self> {
        let Some(first) = traces.first() else {
            return Err(Error::InvalidParameter("no traces to aggregate".into()));
        };
        if traces
            .iter()
            .any(|t| t.checkpoints.len() != first.checkpoints.len())
        {
            return Err(Error::InvalidParameter(
                "traces have different checkpoint grids".into(),
            ));
        }
        let n = traces.len() as f64;
        let points = (0..first.checkpoints.len())
            .map(|k| {
                let (t, x0) = first.checkpoints[k];
                // shifted by the first value so identical replicas give exactly zero spread
                let (s1, s2) = traces.iter().fold((0.0, 0.0), |(s1, s2), tr| {
                    let y = tr.checkpoints[k].1 - x0;
                    (s1 + y, s2 + y * y)
                });
                let mean = x0 + s1 / n;
                let stderr = if traces.len() < 2 {
                    0.0
                } else {
                    let var = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);
                    (var / n).sqrt()
                };
                CurvePoint { t, mean, stderr }
            })
            .collect();
        Ok(Self {
            points,
            replications: traces.len(),
            final_regrets: traces.iter().map(|t| t.final_regret()).collect(),
        })
    }

    pub fn final_mean(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.mean)
    }

    /// Mean regret at the checkpoint `t`, if it is on the grid.
    pub fn mean_at(&self, t: u64) -> Option<f64> {
        self.points.iter().find(|p| p.t == t).map(|p| p.mean)
    }
}

/// Run every seed (in parallel) and aggregate in seed order.
pub fn replicate(
    inst: &ProblemInstance,
    config: &AlgorithmConfig,
    horizon: u64,
    seeds: &[u64],
) -> Result<RegretCurve> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "replicate needs at least one seed".into(),
        ));
    }
    let traces: Vec<RunTrace> = seeds
        .par_iter()
        .map(|&s| run_experiment(inst, config, horizon, s))
        .collect::<Result<_>>()?;
    RegretCurve::from_traces(&traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::RadiusRule;
    use crate::instances::{PayoffDescriptor, RewardModel};
    use crate::metric::MetricDescriptor;

    fn two_arm() -> ProblemInstance {
        ProblemInstance::new(
            MetricDescriptor::finite(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            PayoffDescriptor::ExplicitFinite {
                values: vec![0.9, 0.1],
            },
            RewardModel::Bernoulli,
            0,
        )
        .unwrap()
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(10), vec![1, 2, 3, 4, 5, 6, 8, 10]);
        assert_eq!(checkpoints(2), vec![1, 2]);
        let g = checkpoints(1 << 17);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), 1 << 17);
    }

    #[test]
    fn recorded_trace_matches_checkpoints() {
        let inst = two_arm();
        let cfg = AlgorithmConfig::zooming(RadiusRule::standard());
        let trace = run_observed(&inst, &cfg, 500, 3, true, &mut algorithms::NullObserver).unwrap();
        let recs = trace.records.as_ref().unwrap();
        assert_eq!(recs.len(), 500);
        let mut r = 0.0;
        let mut k = 0;
        for rec in recs {
            r += inst.delta(&rec.point);
            if trace.checkpoints[k].0 == rec.t {
                assert_eq!(trace.checkpoints[k].1, r);
                k += 1;
            }
        }
        assert_eq!(k, trace.checkpoints.len());
        assert_eq!(
            trace,
            run_observed(&inst, &cfg, 500, 3, true, &mut algorithms::NullObserver).unwrap()
        );
    }

    #[test]
    fn noiseless_replicas_have_zero_stderr() {
        let inst = two_arm().with_rewards(RewardModel::noiseless()).unwrap();
        let curve = replicate(&inst, &AlgorithmConfig::Ucb1Phased, 200, &[1, 2, 3]).unwrap();
        assert!(curve.points.iter().all(|p| p.stderr == 0.0));
        assert_eq!(curve.replications, 3);
    }

    #[test]
    fn horizon_one_is_rejected() {
        assert!(run_experiment(&two_arm(), &AlgorithmConfig::Ucb1Phased, 1, 0).is_err());
    }
}
