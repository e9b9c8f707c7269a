use rand::Rng;

use super::formulas::{naive_delta, ucb1_index};
use super::{phase_lengths, Observer};
use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::metric::{MetricDescriptor, Point};

/// UCB1 over a fixed list of arms: each arm once, then the largest
/// `mean + sqrt(2 ln t / n)`, ties to the lowest index.
#[derive(Clone, Debug)]
pub struct Ucb1 {
    plays: Vec<u64>,
    sums: Vec<f64>,
    t: u64,
}

impl Ucb1 {
    pub fn new(arms: usize) -> Self {
        Self {
            plays: vec![0; arms],
            sums: vec![0.0; arms],
            t: 0,
        }
    }

    pub fn select(&self) -> usize {
        if let Some(i) = self.plays.iter().position(|&n| n == 0) {
            return i;
        }
        let t = self.t + 1;
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for (i, (&n, &s)) in self.plays.iter().zip(&self.sums).enumerate() {
            let idx = ucb1_index(s / n as f64, t, n);
            if idx > best_index {
                best = i;
                best_index = idx;
            }
        }
        best
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.plays[arm] += 1;
        self.sums[arm] += reward;
        self.t += 1;
    }

    pub fn plays(&self) -> &[u64] {
        &self.plays
    }
}

/// One restarted UCB1 phase over `arms`.
pub fn run_ucb1_phase<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    arms: &[Point],
    len: u64,
    start: u64,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Ucb1 {
    let mut ucb = Ucb1::new(arms.len());
    for k in 1..=len {
        let i = ucb.select();
        let reward = inst.sample_reward(&arms[i], rng);
        ucb.update(i, reward);
        obs.on_play(start + k, &arms[i], reward);
    }
    ucb
}

/// UCB1 over every point of a finite space, restarted each phase.
pub fn run_ucb1_phased<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    horizon: u64,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Result<()> {
    let MetricDescriptor::FiniteExplicit { matrix } = inst.metric() else {
        return Err(Error::Unsupported(
            "phased UCB1 needs a finite strategy space".into(),
        ));
    };
    let arms: Vec<Point> = (0..matrix.len()).map(Point::Finite).collect();
    for (phase, len, start) in phase_lengths(horizon) {
        obs.on_phase_start(phase, len);
        run_ucb1_phase(inst, &arms, len, start, rng, obs);
    }
    Ok(())
}

/// UCB1 on a greedy net of scale `2^(-i/(d+2))` in each phase `i`.
pub fn run_naive<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    d: f64,
    horizon: u64,
    net_cap: usize,
    rng: &mut R,
    obs: &mut dyn Observer,
) -> Result<()> {
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "naive dimension must be >= 0, got {d}"
        )));
    }
    for (phase, len, start) in phase_lengths(horizon) {
        let full_len = 1u64 << phase;
        let delta = naive_delta(full_len, d);
        let net = inst.metric().build_net(delta, net_cap)?;
        log::debug!(
            "naive phase {phase}: delta {delta:.5}, {} arms",
            net.points.len()
        );
        obs.on_phase_start(phase, len);
        run_ucb1_phase(inst, &net.points, len, start, rng, obs);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::NullObserver;
    use crate::instances::{PayoffDescriptor, RewardModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn plays_each_arm_once_first() {
        let mut u = Ucb1::new(3);
        for expect in 0..3 {
            let i = u.select();
            assert_eq!(i, expect);
            u.update(i, 0.0);
        }
    }

    #[test]
    fn single_arm_net_has_linear_regret() {
        let inst = ProblemInstance::new(
            MetricDescriptor::interval(1.0).unwrap(),
            PayoffDescriptor::peak(Point::Interval(0.3)),
            RewardModel::Bernoulli,
            0,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let ucb = run_ucb1_phase(
            &inst,
            &[Point::Interval(0.5)],
            100,
            0,
            &mut rng,
            &mut NullObserver,
        );
        assert_eq!(ucb.plays(), &[100]);
    }

    #[test]
    fn phased_ucb1_rejects_continuous_space() {
        let inst = ProblemInstance::new(
            MetricDescriptor::interval(1.0).unwrap(),
            PayoffDescriptor::peak(Point::Interval(0.3)),
            RewardModel::Bernoulli,
            0,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(run_ucb1_phased(&inst, 10, &mut rng, &mut NullObserver).is_err());
    }
}
