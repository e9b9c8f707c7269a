use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the observed reward around the expected payoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardModel {
    /// Reward in `{0, 1}` with mean `mu(u)`.
    Bernoulli,
    Gaussian {
        sigma: f64,
    },
    /// Uniform noise on `[-half_width, half_width]`.
    BoundedUniform {
        half_width: f64,
    },
    /// Discrete zero-mean noise given as `(value, probability)` atoms.
    PointMass {
        atoms: Vec<(f64, f64)>,
    },
    /// Symmetric noise on `[-1, 1]` with density `(1 - alpha)/2 * |x|^(-alpha)`.
    SharpPeak {
        alpha: f64,
    },
    /// Symmetric piecewise-constant density: `inner_density` on
    /// `|x| <= jump_at`, and the constant that normalizes it on
    /// `jump_at < |x| <= support`.
    JumpDensity {
        jump_at: f64,
        support: f64,
        inner_density: f64,
    },
    /// Symmetric Lomax noise: `|X| = scale * ((1 - U)^(-1/tail) - 1)`.
    HeavyTailed {
        tail: f64,
        scale: f64,
    },
}

const ATOM_TOL: f64 = 1e-12;

impl RewardModel {
    /// Noise that is identically zero.
    pub fn noiseless() -> Self {
        RewardModel::PointMass {
            atoms: vec![(0.0, 1.0)],
        }
    }

    pub fn jump_density_default() -> Self {
        RewardModel::JumpDensity {
            jump_at: 0.25,
            support: 0.75,
            inner_density: 1.2,
        }
    }

    pub fn heavy_tailed_default() -> Self {
        RewardModel::HeavyTailed {
            tail: 3.5,
            scale: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRewards(msg));
        match self {
            RewardModel::Bernoulli => Ok(()),
            RewardModel::Gaussian { sigma } if !(sigma.is_finite() && *sigma > 0.0) => {
                bad(format!("gaussian sigma must be > 0, got {sigma}"))
            }
            RewardModel::BoundedUniform { half_width }
                if !(half_width.is_finite() && *half_width > 0.0) =>
            {
                bad(format!("uniform half_width must be > 0, got {half_width}"))
            }
            RewardModel::PointMass { atoms } => {
                if atoms.is_empty() {
                    return bad("point-mass noise needs at least one atom".into());
                }
                if atoms.iter().any(|&(v, p)| !v.is_finite() || !(p > 0.0)) {
                    return bad(
                        "point-mass atoms need finite values and positive probabilities".into(),
                    );
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                let mean: f64 = atoms.iter().map(|a| a.0 * a.1).sum();
                if (total - 1.0).abs() > ATOM_TOL {
                    return bad(format!("point-mass probabilities sum to {total}, not 1"));
                }
                if mean.abs() > ATOM_TOL {
                    return bad(format!("point-mass noise has mean {mean}, not 0"));
                }
                Ok(())
            }
            RewardModel::SharpPeak { alpha } if !(*alpha > 0.0 && *alpha < 1.0) => {
                bad(format!("sharp-peak alpha must lie in (0, 1), got {alpha}"))
            }
            RewardModel::JumpDensity {
                jump_at,
                support,
                inner_density,
            } => {
                if !(*jump_at > 0.0
                    && support > jump_at
                    && support.is_finite()
                    && *inner_density > 0.0)
                {
                    return bad(
                        "jump density needs 0 < jump_at < support and inner_density > 0".into(),
                    );
                }
                let outer = self.jump_outer_density();
                if !(outer > 0.0) {
                    return bad(format!(
                        "inner density {inner_density} leaves no mass outside the jump"
                    ));
                }
                if (outer - inner_density).abs() < ATOM_TOL {
                    return bad(
                        "jump density has no jump: inner and outer densities coincide".into(),
                    );
                }
                Ok(())
            }
            RewardModel::HeavyTailed { tail, scale } => {
                if !(*tail > 3.0 && tail.is_finite()) {
                    return bad(format!(
                        "heavy-tailed index must exceed 3 for a finite third moment, got {tail}"
                    ));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!("heavy-tailed scale must be > 0, got {scale}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn jump_outer_density(&self) -> f64 {
        match self {
            RewardModel::JumpDensity {
                jump_at,
                support,
                inner_density,
            } => (1.0 - 2.0 * jump_at * inner_density) / (2.0 * (support - jump_at)),
            _ => f64::NAN,
        }
    }

    /// True when every reward lies in `[0, 1]`.
    pub fn is_bernoulli(&self) -> bool {
        matches!(self, RewardModel::Bernoulli)
    }

    /// True when the reward always equals the expected payoff.
    pub fn is_noiseless(&self) -> bool {
        matches!(self, RewardModel::PointMass { atoms } if atoms.iter().all(|a| a.0 == 0.0))
    }

    /// Standard deviation of the additive noise, or `None` for Bernoulli
    /// rewards, whose variance depends on the mean.
    pub fn noise_std(&self) -> Option<f64> {
        Some(match self {
            RewardModel::Bernoulli => return None,
            RewardModel::Gaussian { sigma } => *sigma,
            RewardModel::BoundedUniform { half_width } => half_width / 3f64.sqrt(),
            RewardModel::PointMass { atoms } => {
                atoms.iter().map(|a| a.0 * a.0 * a.1).sum::<f64>().sqrt()
            }
            RewardModel::SharpPeak { alpha } => ((1.0 - alpha) / (3.0 - alpha)).sqrt(),
            RewardModel::JumpDensity {
                jump_at,
                support,
                inner_density,
            } => {
                let outer = self.jump_outer_density();
                let second = 2.0 / 3.0
                    * (inner_density * jump_at.powi(3)
                        + outer * (support.powi(3) - jump_at.powi(3)));
                second.sqrt()
            }
            RewardModel::HeavyTailed { tail, scale } => {
                scale * (2.0 / ((tail - 1.0) * (tail - 2.0))).sqrt()
            }
        })
    }

    /// `E|X|^3` of the additive noise, `None` for Bernoulli rewards.
    pub fn third_abs_moment(&self) -> Option<f64> {
        Some(match self {
            RewardModel::Bernoulli => return None,
            RewardModel::Gaussian { sigma } => {
                2.0 * (2.0 / std::f64::consts::PI).sqrt() * sigma.powi(3)
            }
            RewardModel::BoundedUniform { half_width } => half_width.powi(3) / 4.0,
            RewardModel::PointMass { atoms } => atoms.iter().map(|a| a.0.abs().powi(3) * a.1).sum(),
            RewardModel::SharpPeak { alpha } => (1.0 - alpha) / (4.0 - alpha),
            RewardModel::JumpDensity {
                jump_at,
                support,
                inner_density,
            } => {
                let outer = self.jump_outer_density();
                0.5 * (inner_density * jump_at.powi(4)
                    + outer * (support.powi(4) - jump_at.powi(4)))
            }
            RewardModel::HeavyTailed { tail, scale } => {
                6.0 * scale.powi(3) / ((tail - 1.0) * (tail - 2.0) * (tail - 3.0))
            }
        })
    }

    /// Draw a reward with expectation `mu`.
    pub fn sample<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> f64 {
        match self {
            RewardModel::Bernoulli => {
                if rng.random::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
            _ => mu + self.sample_noise(rng),
        }
    }

    /// Draw the additive noise alone; Bernoulli rewards have none to draw.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RewardModel::Bernoulli => 0.0,
            RewardModel::Gaussian { sigma } => Normal::new(0.0, *sigma)
                .expect("validated sigma")
                .sample(rng),
            RewardModel::BoundedUniform { half_width } => {
                rng.random_range(-half_width..=*half_width)
            }
            RewardModel::PointMass { atoms } => {
                if atoms.len() == 1 {
                    return atoms[0].0;
                }
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            RewardModel::SharpPeak { alpha } => {
                let z: f64 = rng.random();
                signed(rng, z.powf(1.0 / (1.0 - alpha)))
            }
            RewardModel::JumpDensity {
                jump_at,
                support,
                inner_density,
            } => {
                let inner_mass = 2.0 * jump_at * inner_density;
                let mag = if rng.random::<f64>() < inner_mass {
                    rng.random::<f64>() * jump_at
                } else {
                    jump_at + rng.random::<f64>() * (support - jump_at)
                };
                signed(rng, mag)
            }
            RewardModel::HeavyTailed { tail, scale } => {
                let u: f64 = rng.random();
                signed(rng, scale * ((1.0 - u).powf(-1.0 / tail) - 1.0))
            }
        }
    }
}

fn signed<R: Rng + ?Sized>(rng: &mut R, x: f64) -> f64 {
    if rng.random::<bool>() {
        x
    } else {
        -x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn default_jump_density_has_outer_mass() {
        let m = RewardModel::jump_density_default();
        m.validate().unwrap();
        assert!((m.jump_outer_density() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_biased_atoms() {
        let m = RewardModel::PointMass {
            atoms: vec![(0.1, 0.5), (0.0, 0.5)],
        };
        assert!(m.validate().is_err());
        assert!(RewardModel::noiseless().validate().is_ok());
        assert!(RewardModel::SharpPeak { alpha: 1.0 }.validate().is_err());
        assert!(RewardModel::HeavyTailed {
            tail: 3.0,
            scale: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn degenerate_bernoulli() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| RewardModel::Bernoulli.sample(1.0, &mut rng) == 1.0));
        assert!((0..1000).all(|_| RewardModel::Bernoulli.sample(0.0, &mut rng) == 0.0));
    }

    #[test]
    fn supports_are_respected() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let sharp = RewardModel::SharpPeak { alpha: 0.5 };
        let jump = RewardModel::jump_density_default();
        for _ in 0..10_000 {
            assert!(sharp.sample_noise(&mut rng).abs() <= 1.0);
            assert!(jump.sample_noise(&mut rng).abs() <= 0.75);
        }
    }
}
