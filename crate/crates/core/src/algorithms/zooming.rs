use std::cmp::Ordering;

use rand::Rng;

use super::radius::{clamp_radius, RadiusRule};
use super::{phase_lengths, Observer};
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::metric::Point;

/// Guard against rules that hand out zero radii to fresh arms.
const MAX_ACTIVATIONS_PER_ROUND: usize = 1 << 16;

/// Statistics of one active strategy within a phase.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmRecord {
    pub strategy: Point,
    pub plays: u64,
    pub reward_sum: f64,
    /// Global round at which the arm was activated.
    pub activation_time: u64,
    /// Current confidence radius.
    pub radius: f64,
}

impl ArmRecord {
    pub fn new(strategy: Point, activation_time: u64, radius: f64) -> Self {
        Self {
            strategy,
            plays: 0,
            reward_sum: 0.0,
            activation_time,
            radius,
        }
    }

    /// Sample mean, 0 before the first play.
    pub fn mean(&self) -> f64 {
        if self.plays == 0 {
            0.0
        } else {
            self.reward_sum / self.plays as f64
        }
    }

    pub fn index(&self) -> f64 {
        super::formulas::index(self.mean(), self.radius)
    }
}

/// State of a live phase, shared with observers.
#[derive(Clone, Debug)]
pub struct PhaseState {
    pub phase: u32,
    pub len: u64,
    /// Global rounds completed before the phase started.
    pub start: u64,
    /// Rounds completed within the phase.
    pub round: u64,
    pub arms: Vec<ArmRecord>,
}

impl PhaseState {
    pub fn new(phase: u32, len: u64, start: u64) -> Self {
        Self {
            phase,
            len,
            start,
            round: 0,
            arms: Vec::new(),
        }
    }

    pub(crate) fn balls(&self) -> Vec<(&Point, f64)> {
        self.arms.iter().map(|a| (&a.strategy, a.radius)).collect()
    }

    /// Active arm with the largest index; ties go to the earliest
    /// activation, then to the lexicographically smallest point.
    pub fn argmax_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, arm) in self.arms.iter().enumerate() {
            let idx = arm.index();
            let better = match best {
                None => true,
                Some((b, bi)) => match idx.partial_cmp(&bi).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => {
                        let other = &self.arms[b];
                        arm.activation_time
                            .cmp(&other.activation_time)
                            .then_with(|| arm.strategy.lex_cmp(&other.strategy))
                            == Ordering::Less
                    }
                },
            };
            if better {
                best = Some((i, idx));
            }
        }
        best.map(|b| b.0)
    }

    /// Play arm `i`, record the reward and refresh its radius. Returns the
    /// radius before the update.
    pub(crate) fn play(&mut self, i: usize, reward: f64, rule: &RadiusRule) -> Result<f64> {
        let phase = self.phase;
        let round = self.round;
        let arm = &mut self.arms[i];
        arm.plays += 1;
        arm.reward_sum += reward;
        let old = arm.radius;
        let raw = rule.raw(phase, arm.plays, arm.mean(), round)?;
        arm.radius = clamp_radius(old, raw);
        Ok(old)
    }
}

pub(crate) fn activate(state: &mut PhaseState, w: Point, rule: &RadiusRule) -> Result<()> {
    let t_local = state.round + 1;
    let radius = rule.raw(state.phase, 0, 0.0, t_local)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius rule gives a fresh arm radius {radius}"
        )));
    }
    state
        .arms
        .push(ArmRecord::new(w, state.start + t_local, radius));
    Ok(())
}

/// One phase of the zooming algorithm with a fresh active set.
pub fn run_zooming_phase<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    rule: &RadiusRule,
    phase: u32,
    len: u64,
    start: u64,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Result<PhaseState> {
    rule.validate()?;
    let metric = inst.metric();
    let mut state = PhaseState::new(phase, len, start);
    obs.on_phase_start(phase, len);
    // after a play only the played arm's ball shrinks, so only its old ball
    // can contain newly uncovered points
    let mut dirty: Option<(Point, f64)> = None;
    while state.round < len {
        // step 1: activate uncovered strategies
        let mut activations = 0;
        loop {
            let balls = state.balls();
            let region = dirty
                .as_ref()
                .filter(|d| d.1.is_finite())
                .map(|(c, r)| (c, *r));
            let Some(w) = metric.uncovered(&balls, region) else {
                break;
            };
            activations += 1;
            if activations > MAX_ACTIVATIONS_PER_ROUND {
                return Err(Error::Unsupported(format!(
                    "more than {MAX_ACTIVATIONS_PER_ROUND} activations in one round"
                )));
            }
            activate(&mut state, w, rule)?;
        }
        obs.on_step1(inst, &state);
        // step 2: play the arm with the largest index
        let i = state
            .argmax_index()
            .expect("covered space has an active arm");
        let reward = inst.sample_reward(&state.arms[i].strategy, rng);
        state.round += 1;
        let old = state.play(i, reward, rule)?;
        obs.on_play(start + state.round, &state.arms[i].strategy, reward);
        obs.on_update(inst, &state, i);
        dirty = Some((state.arms[i].strategy.clone(), old));
    }
    Ok(state)
}

/// Zooming over phases of 2, 4, 8, ... rounds until `horizon` rounds.
pub fn run_zooming<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    rule: &RadiusRule,
    horizon: u64,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Result<()> {
    for (phase, len, start) in phase_lengths(horizon) {
        run_zooming_phase(inst, rule, phase, len, start, rng, obs)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::NullObserver;
    use crate::instances::{PayoffDescriptor, RewardModel};
    use crate::metric::{Ball, MetricDescriptor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    struct Checks {
        first_round_activations: Option<usize>,
        covered_every_round: bool,
    }

    impl Observer for Checks {
        fn on_play(&mut self, _t: u64, _p: &Point, _r: f64) {}

        fn on_step1(&mut self, inst: &ProblemInstance, state: &PhaseState) {
            if state.round == 0 && self.first_round_activations.is_none() {
                self.first_round_activations = Some(state.arms.len());
            }
            let balls: Vec<Ball> = state
                .arms
                .iter()
                .map(|a| Ball {
                    center: a.strategy.clone(),
                    radius: a.radius,
                })
                .collect();
            if !inst.metric().covering_query(&balls).unwrap().is_covered() {
                self.covered_every_round = false;
            }
        }
    }

    #[test]
    fn first_round_activates_once_and_stays_covered() {
        let inst = ProblemInstance::new(
            MetricDescriptor::interval(1.0).unwrap(),
            PayoffDescriptor::peak(Point::Interval(0.3)),
            RewardModel::Bernoulli,
            0,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mut checks = Checks {
            first_round_activations: None,
            covered_every_round: true,
        };
        let st = run_zooming_phase(
            &inst,
            &RadiusRule::standard(),
            8,
            256,
            0,
            &mut rng,
            &mut checks,
        )
        .unwrap();
        assert_eq!(checks.first_round_activations, Some(1));
        assert!(checks.covered_every_round);
        assert_eq!(st.arms.iter().map(|a| a.plays).sum::<u64>(), 256);
    }

    #[test]
    fn ties_go_to_earliest_activation() {
        let mut st = PhaseState::new(1, 4, 0);
        st.arms.push(ArmRecord::new(Point::Interval(0.9), 3, 0.5));
        st.arms.push(ArmRecord::new(Point::Interval(0.1), 5, 0.5));
        st.arms.push(ArmRecord::new(Point::Interval(0.5), 2, 0.5));
        assert_eq!(st.argmax_index(), Some(2));
        st.arms[1].activation_time = 2;
        assert_eq!(st.argmax_index(), Some(1));
    }

    #[test]
    fn single_point_space_always_plays_it() {
        let inst = ProblemInstance::new(
            MetricDescriptor::finite(vec![vec![0.0]]).unwrap(),
            PayoffDescriptor::ExplicitFinite { values: vec![0.4] },
            RewardModel::Bernoulli,
            0,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        run_zooming(
            &inst,
            &RadiusRule::standard(),
            50,
            &mut rng,
            &mut NullObserver,
        )
        .unwrap();
    }
}
