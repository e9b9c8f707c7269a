//! Payoff functions with known optima, reward models and problem instances.

mod checks;
mod needle;
mod rewards;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricDescriptor, Point, Shape};

pub use checks::{
    verify_lipschitz, zooming_dimension_estimate, DimensionEstimate, LipschitzReport, RadiusCount,
    DEFAULT_GRID_CAP,
};
pub use needle::{generate_needle_tower, NeedleLevel, NeedleTower, NeedleTowerSpec};
pub use rewards::RewardModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffDescriptor {
    /// One expected payoff per point of a finite space.
    ExplicitFinite {
        values: Vec<f64>,
    },
    /// `mu(u) = 1 - L(u, S)`, floored at 0.
    DistanceToTarget {
        targets: Vec<Point>,
    },
    /// `mu(u) = 1 - (f(L(u, S)) - f(0))`, floored at 0.
    ShapedTarget {
        targets: Vec<Point>,
        shape: Shape,
    },
    NeedleTower(NeedleTower),
    /// `mu(u) = mu_star - L(u, peak)`, floored at 0.
    PeakFunction {
        peak: Point,
        mu_star: f64,
    },
    /// A base payoff plus `height` on the open ball `B(center, radius)`,
    /// clipped to `[0, 1]`. Breaks the Lipschitz condition on purpose.
    Bump {
        base: Box<PayoffDescriptor>,
        center: Point,
        radius: f64,
        height: f64,
    },
}

impl PayoffDescriptor {
    pub fn peak(peak: Point) -> Self {
        PayoffDescriptor::PeakFunction { peak, mu_star: 1.0 }
    }

    pub fn target(target: Point) -> Self {
        PayoffDescriptor::DistanceToTarget {
            targets: vec![target],
        }
    }

    fn validate(&self, metric: &MetricDescriptor) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPayoff(msg));
        match self {
            PayoffDescriptor::ExplicitFinite { values } => {
                let MetricDescriptor::FiniteExplicit { matrix } = metric else {
                    return bad("explicit payoffs need a finite metric".into());
                };
                if values.len() != matrix.len() {
                    return bad(format!(
                        "{} payoff values for {} points",
                        values.len(),
                        matrix.len()
                    ));
                }
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return bad(format!("payoff value {v} outside [0, 1]"));
                }
                if values.is_empty() {
                    return bad("explicit payoff list is empty".into());
                }
                Ok(())
            }
            PayoffDescriptor::DistanceToTarget { targets }
            | PayoffDescriptor::ShapedTarget { targets, .. } => {
                if targets.is_empty() {
                    return bad("target set is empty".into());
                }
                targets.iter().try_for_each(|t| metric.validate_point(t))
            }
            PayoffDescriptor::NeedleTower(t) => {
                if &t.host != metric {
                    return bad("needle tower was generated on a different host metric".into());
                }
                Ok(())
            }
            PayoffDescriptor::PeakFunction { peak, mu_star } => {
                if !(0.0..=1.0).contains(mu_star) {
                    return bad(format!("peak value {mu_star} outside [0, 1]"));
                }
                metric.validate_point(peak)
            }
            PayoffDescriptor::Bump {
                base,
                center,
                radius,
                height,
            } => {
                base.validate(metric)?;
                if !(*radius >= 0.0 && height.is_finite()) {
                    return bad("bump needs radius >= 0 and a finite height".into());
                }
                metric.validate_point(center)
            }
        }
    }

    fn eval(&self, metric: &MetricDescriptor, u: &Point) -> f64 {
        match self {
            PayoffDescriptor::ExplicitFinite { values } => match u {
                Point::Finite(i) => values[*i],
                _ => panic!("explicit payoff evaluated at a non-finite point"),
            },
            PayoffDescriptor::DistanceToTarget { targets } => {
                (1.0 - set_distance(metric, u, targets)).max(0.0)
            }
            PayoffDescriptor::ShapedTarget { targets, shape } => {
                (1.0 - shape.excess(set_distance(metric, u, targets))).max(0.0)
            }
            PayoffDescriptor::NeedleTower(t) => t.mu(u),
            PayoffDescriptor::PeakFunction { peak, mu_star } => {
                (mu_star - metric.dist(u, peak)).max(0.0)
            }
            PayoffDescriptor::Bump {
                base,
                center,
                radius,
                height,
            } => {
                let v = base.eval(metric, u);
                if metric.dist(u, center) < *radius {
                    (v + height).clamp(0.0, 1.0)
                } else {
                    v
                }
            }
        }
    }

    /// Analytic supremum and a point attaining it.
    fn optimum(&self, metric: &MetricDescriptor) -> (f64, Point) {
        match self {
            PayoffDescriptor::ExplicitFinite { values } => {
                let mut best = 0;
                for (i, &v) in values.iter().enumerate() {
                    if v > values[best] {
                        best = i;
                    }
                }
                (values[best], Point::Finite(best))
            }
            PayoffDescriptor::DistanceToTarget { targets }
            | PayoffDescriptor::ShapedTarget { targets, .. } => (1.0, targets[0].clone()),
            PayoffDescriptor::NeedleTower(t) => (t.mu_star, t.witness.clone()),
            PayoffDescriptor::PeakFunction { peak, mu_star } => (*mu_star, peak.clone()),
            PayoffDescriptor::Bump {
                base,
                center,
                height,
                ..
            } => {
                let (star, witness) = base.optimum(metric);
                let bumped = (base.eval(metric, center) + height).clamp(0.0, 1.0);
                if bumped > star {
                    (bumped, center.clone())
                } else {
                    (star, witness)
                }
            }
        }
    }

    /// Points where the payoff has structure worth probing.
    pub(crate) fn anchors(&self) -> Vec<Point> {
        match self {
            PayoffDescriptor::ExplicitFinite { .. } => Vec::new(),
            PayoffDescriptor::DistanceToTarget { targets }
            | PayoffDescriptor::ShapedTarget { targets, .. } => targets.clone(),
            PayoffDescriptor::NeedleTower(t) => t.levels.iter().map(|l| l.center.clone()).collect(),
            PayoffDescriptor::PeakFunction { peak, .. } => vec![peak.clone()],
            PayoffDescriptor::Bump { base, center, .. } => {
                let mut a = base.anchors();
                a.push(center.clone());
                a
            }
        }
    }
}

fn set_distance(metric: &MetricDescriptor, u: &Point, targets: &[Point]) -> f64 {
    targets
        .iter()
        .map(|s| metric.dist(u, s))
        .fold(f64::INFINITY, f64::min)
}

/// A metric, a payoff on it, and the reward noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceParts", into = "InstanceParts")]
pub struct ProblemInstance {
    metric: MetricDescriptor,
    payoff: PayoffDescriptor,
    rewards: RewardModel,
    seed: u64,
    mu_star: f64,
    witness: Point,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceParts {
    metric: MetricDescriptor,
    payoff: PayoffDescriptor,
    rewards: RewardModel,
    seed: u64,
}

impl TryFrom<InstanceParts> for ProblemInstance {
    type Error = Error;

    fn try_from(p: InstanceParts) -> Result<Self> {
        ProblemInstance::new(p.metric, p.payoff, p.rewards, p.seed)
    }
}

impl From<ProblemInstance> for InstanceParts {
    fn from(i: ProblemInstance) -> Self {
        InstanceParts {
            metric: i.metric,
            payoff: i.payoff,
            rewards: i.rewards,
            seed: i.seed,
        }
    }
}

impl ProblemInstance {
    pub fn new(
        metric: MetricDescriptor,
        payoff: PayoffDescriptor,
        rewards: RewardModel,
        seed: u64,
    ) -> Result<Self> {
        metric.validate()?;
        if metric.is_empty() {
            return Err(Error::InvalidMetric("strategy space is empty".into()));
        }
        payoff.validate(&metric)?;
        rewards.validate()?;
        let (mu_star, witness) = payoff.optimum(&metric);
        Ok(Self {
            metric,
            payoff,
            rewards,
            seed,
            mu_star,
            witness,
        })
    }

    pub fn metric(&self) -> &MetricDescriptor {
        &self.metric
    }

    pub fn payoff(&self) -> &PayoffDescriptor {
        &self.payoff
    }

    pub fn rewards(&self) -> &RewardModel {
        &self.rewards
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mu_star(&self) -> f64 {
        self.mu_star
    }

    pub fn optimal_witness(&self) -> &Point {
        &self.witness
    }

    /// Expected payoff, checking the point first.
    pub fn mu(&self, u: &Point) -> Result<f64> {
        self.metric.validate_point(u)?;
        Ok(self.payoff.eval(&self.metric, u))
    }

    /// Expected payoff at a point already known to be valid.
    pub(crate) fn mu_unchecked(&self, u: &Point) -> f64 {
        self.payoff.eval(&self.metric, u)
    }

    /// Gap `mu_star - mu(u)`.
    pub fn delta(&self, u: &Point) -> f64 {
        self.mu_star - self.mu_unchecked(u)
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, u: &Point, rng: &mut R) -> f64 {
        self.rewards.sample(self.mu_unchecked(u), rng)
    }

    /// Copy of this instance with different rewards.
    pub fn with_rewards(&self, rewards: RewardModel) -> Result<Self> {
        Self::new(self.metric.clone(), self.payoff.clone(), rewards, self.seed)
    }
}
