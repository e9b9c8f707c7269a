//! Invariant monitors. They read the true payoffs, which only a
//! simulation can do.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_observed, run_rng, RunTrace};
use crate::algorithms::chernoff_radius;
use crate::algorithms::zooming::run_zooming_phase;
use crate::algorithms::{
    run_zooming, AlgorithmConfig, FatDecomposition, Observer, PhaseState, QuotaSnapshot, RadiusRule,
};
use crate::error::Result;
use crate::instances::ProblemInstance;
use crate::metric::Point;

/// Outcome of the clean-run checks for one zooming phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCheck {
    pub phase: u32,
    pub len: u64,
    /// Every played arm stayed within its radius at every round.
    pub clean: bool,
    /// Rounds and arms with `Delta(v) > 4 r_t(v)`.
    pub gap_violations: u64,
    /// Active pairs with `L(u, v) <= min(Delta(u), Delta(v)) / 4`.
    pub separation_violations: u64,
    pub arms: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub phases: Vec<PhaseCheck>,
}

impl CleanReport {
    fn filtered(&self, phase: Option<u32>) -> impl Iterator<Item = &PhaseCheck> {
        self.phases
            .iter()
            .filter(move |p| phase.is_none_or(|i| p.phase == i))
    }

    pub fn phase_count(&self, phase: Option<u32>) -> usize {
        self.filtered(phase).count()
    }

    pub fn non_clean(&self, phase: Option<u32>) -> usize {
        self.filtered(phase).filter(|p| !p.clean).count()
    }

    pub fn non_clean_fraction(&self, phase: Option<u32>) -> f64 {
        let n = self.phase_count(phase);
        if n == 0 {
            0.0
        } else {
            self.non_clean(phase) as f64 / n as f64
        }
    }

    /// Gap violations summed over clean phases.
    pub fn clean_gap_violations(&self) -> u64 {
        self.phases
            .iter()
            .filter(|p| p.clean)
            .map(|p| p.gap_violations)
            .sum()
    }

    /// Separation violations summed over clean phases.
    pub fn clean_separation_violations(&self) -> u64 {
        self.phases
            .iter()
            .filter(|p| p.clean)
            .map(|p| p.separation_violations)
            .sum()
    }

    /// Upper bound `4^-i` on the probability that phase `i` is not clean.
    pub fn non_clean_bound(phase: u32) -> f64 {
        4f64.powi(-(phase as i32))
    }

    fn extend(&mut self, other: CleanReport) {
        self.phases.extend(other.phases);
    }
}

/// Observer that checks cleanliness, the gap bound and the separation
/// bound on a zooming run.
#[derive(Debug, Default)]
pub struct CleanMonitor {
    current: Option<PhaseCheck>,
    known: usize,
    report: CleanReport,
}

impl CleanMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn finish(mut self) -> CleanReport {
        self.flush();
        self.report
    }

    fn flush(&mut self) {
        if let Some(p) = self.current.take() {
            self.report.phases.push(p);
        }
    }
}

impl Observer for CleanMonitor {
    fn on_play(&mut self, _t: u64, _point: &Point, _reward: f64) {}

    fn on_phase_start(&mut self, phase: u32, len: u64) {
        self.flush();
        self.known = 0;
        self.current = Some(PhaseCheck {
            phase,
            len,
            clean: true,
            gap_violations: 0,
            separation_violations: 0,
            arms: 0,
        });
    }

    fn on_step1(&mut self, inst: &ProblemInstance, state: &PhaseState) {
        let Some(check) = self.current.as_mut() else {
            return;
        };
        let metric = inst.metric();
        // radii of unplayed arms never change, so only new arms need checks here
        for v in self.known..state.arms.len() {
            let arm = &state.arms[v];
            let dv = inst.delta(&arm.strategy);
            if dv > 4.0 * arm.radius {
                check.gap_violations += 1;
            }
            for u in &state.arms[..v] {
                let du = inst.delta(&u.strategy);
                if metric.dist(&u.strategy, &arm.strategy) <= 0.25 * du.min(dv) {
                    check.separation_violations += 1;
                }
            }
        }
        self.known = state.arms.len();
        check.arms = self.known;
    }

    fn on_update(&mut self, inst: &ProblemInstance, state: &PhaseState, i: usize) {
        let Some(check) = self.current.as_mut() else {
            return;
        };
        let arm = &state.arms[i];
        let mu = inst.mu_unchecked(&arm.strategy);
        if (arm.mean() - mu).abs() > arm.radius {
            check.clean = false;
        }
        if inst.mu_star() - mu > 4.0 * arm.radius {
            check.gap_violations += 1;
        }
    }
}

/// Clean-run checks on zooming runs of `horizon` rounds, one per seed.
pub fn monitor_clean_invariants(
    inst: &ProblemInstance,
    rule: &RadiusRule,
    horizon: u64,
    seeds: &[u64],
) -> Result<CleanReport> {
    let parts: Vec<CleanReport> = seeds
        .par_iter()
        .map(|&s| {
            let mut mon = CleanMonitor::new();
            run_zooming(inst, rule, horizon, &mut run_rng(s), &mut mon)?;
            Ok(mon.finish())
        })
        .collect::<Result<_>>()?;
    let mut report = CleanReport::default();
    parts.into_iter().for_each(|p| report.extend(p));
    Ok(report)
}

/// Clean-run checks on one full phase `phase` per seed.
pub fn monitor_clean_phases(
    inst: &ProblemInstance,
    rule: &RadiusRule,
    phase: u32,
    seeds: &[u64],
) -> Result<CleanReport> {
    let parts: Vec<CleanReport> = seeds
        .par_iter()
        .map(|&s| {
            let mut mon = CleanMonitor::new();
            run_zooming_phase(
                inst,
                rule,
                phase,
                1u64 << phase,
                0,
                &mut run_rng(s),
                &mut mon,
            )?;
            Ok(mon.finish())
        })
        .collect::<Result<_>>()?;
    let mut report = CleanReport::default();
    parts.into_iter().for_each(|p| report.extend(p));
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuotaReport {
    pub rounds: u64,
    /// Rounds where some pool exceeded its quota.
    pub quota_violations: u64,
    /// Same-pool pairs with radius `>= rho` closer than `rho`.
    pub separation_violations: u64,
    /// Largest pool load seen.
    pub max_load: usize,
    /// Number of arms activated into pools.
    pub pool_activations: usize,
}

/// Recounts the pools of a quota run at every round.
#[derive(Debug, Default)]
pub struct QuotaMonitor {
    pub report: QuotaReport,
    phase_pool_arms: usize,
}

impl Observer for QuotaMonitor {
    fn on_play(&mut self, _t: u64, _point: &Point, _reward: f64) {}

    fn on_phase_start(&mut self, _phase: u32, _len: u64) {
        self.report.pool_activations += self.phase_pool_arms;
        self.phase_pool_arms = 0;
    }

    fn on_quota_round(&mut self, inst: &ProblemInstance, snap: &QuotaSnapshot<'_>) {
        let rho = snap.params.rho;
        let metric = inst.metric();
        let mut pools: Vec<Vec<&Point>> = Vec::new();
        let mut members = 0;
        for (arm, pool) in snap.state.arms.iter().zip(snap.pools) {
            let Some(p) = *pool else { continue };
            members += 1;
            if arm.radius < rho {
                continue;
            }
            if pools.len() <= p {
                pools.resize_with(p + 1, Vec::new);
            }
            pools[p].push(&arm.strategy);
        }
        self.phase_pool_arms = members;
        self.report.rounds += 1;
        let mut violated = false;
        for pool in &pools {
            self.report.max_load = self.report.max_load.max(pool.len());
            if pool.len() as f64 > snap.params.quota {
                violated = true;
            }
            for (a, u) in pool.iter().enumerate() {
                for v in &pool[..a] {
                    if metric.dist(u, v) < rho {
                        self.report.separation_violations += 1;
                    }
                }
            }
        }
        if violated {
            self.report.quota_violations += 1;
        }
    }
}

/// Quota run with the pool recount attached.
pub fn monitor_quota(
    inst: &ProblemInstance,
    d: f64,
    decomposition: &FatDecomposition,
    horizon: u64,
    seed: u64,
) -> Result<(RunTrace, QuotaReport)> {
    let cfg = AlgorithmConfig::Quota {
        d,
        decomposition: decomposition.clone(),
    };
    let mut mon = QuotaMonitor::default();
    let trace = run_observed(inst, &cfg, horizon, seed, false, &mut mon)?;
    mon.report.pool_activations += mon.phase_pool_arms;
    Ok((trace, mon.report))
}

/// Frequency over `trials` Bernoulli(`mu`) samples of size `n` of the
/// event `|X - mu| < r(alpha, X) < 3 r(alpha, mu)`, `X` the sample mean.
pub fn chernoff_frequency(mu: f64, n: u64, alpha: f64, trials: u64, seed: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) || trials == 0 {
        return Err(crate::error::Error::InvalidParameter(format!(
            "chernoff check needs mu in [0, 1] and trials >= 1, got mu={mu}, trials={trials}"
        )));
    }
    let bound = 3.0 * chernoff_radius(alpha, n, mu)?;
    let binom = rand_distr::Binomial::new(n, mu)
        .map_err(|e| crate::error::Error::InvalidParameter(format!("binomial({n}, {mu}): {e}")))?;
    let mut rng = run_rng(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let x = rng.sample(binom) as f64 / n as f64;
        let r = chernoff_radius(alpha, n, x)?;
        if (x - mu).abs() < r && r < bound {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
