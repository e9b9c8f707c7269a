use serde::{Deserialize, Serialize};

use super::formulas::{max_reward_one_radius, scaled_standard_radius};
use crate::error::{Error, Result};

/// Confidence-radius rule for the zooming algorithm.
///
/// Every `Theta(i_ph)` of the asymptotic rules becomes `c * i_ph`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusRule {
    /// `sqrt(c i_ph / (2 + n))`, `c = 8` by default.
    Standard {
        #[serde(default = "eight")]
        c: f64,
    },
    /// Standard radius times `sigma`, for Gaussian noise.
    ScaledGaussian {
        sigma: f64,
        #[serde(default = "eight")]
        c: f64,
    },
    /// `sigma sqrt(c i_ph / (2 + n))` for `(rho, sigma)`-bounded noise.
    /// The tail bound behind it needs `lambda = sqrt(c i_ph)` to be at most
    /// `rho sigma sqrt(n) / 2`; below that many plays the radius is infinite.
    StochBounded {
        rho: f64,
        sigma: f64,
        #[serde(default = "eight")]
        c: f64,
    },
    /// `c i_ph (3/4)^n`.
    PointMass {
        #[serde(default = "one")]
        c: f64,
    },
    /// `(c i_ph / n)^(1/(1-alpha))`.
    SharpPeak {
        alpha: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// `c i_ph / n`.
    Jump {
        #[serde(default = "one")]
        c: f64,
    },
    /// `alpha/(1+n) + sqrt(alpha (1 - mu_t)/(1+n))` with `alpha = c i_ph`.
    MaxRewardOne {
        #[serde(default = "eight")]
        c: f64,
    },
    /// `c t^a / sqrt(n)` with `t` the round within the phase.
    HeavyTailed {
        #[serde(default = "one_ninth")]
        a: f64,
        #[serde(default = "one")]
        c: f64,
    },
}

fn eight() -> f64 {
    8.0
}

fn one() -> f64 {
    1.0
}

fn one_ninth() -> f64 {
    1.0 / 9.0
}

impl Default for RadiusRule {
    fn default() -> Self {
        RadiusRule::Standard { c: 8.0 }
    }
}

impl RadiusRule {
    pub fn standard() -> Self {
        Self::default()
    }

    pub fn max_reward_one() -> Self {
        RadiusRule::MaxRewardOne { c: 8.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RadiusRule::Standard { .. } => "standard",
            RadiusRule::ScaledGaussian { .. } => "scaled_gaussian",
            RadiusRule::StochBounded { .. } => "stoch_bounded",
            RadiusRule::PointMass { .. } => "point_mass",
            RadiusRule::SharpPeak { .. } => "sharp_peak",
            RadiusRule::Jump { .. } => "jump",
            RadiusRule::MaxRewardOne { .. } => "max_reward_one",
            RadiusRule::HeavyTailed { .. } => "heavy_tailed",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "radius rule parameter {name} must be > 0, got {v}"
                )))
            }
        };
        match *self {
            RadiusRule::Standard { c } | RadiusRule::PointMass { c } | RadiusRule::Jump { c } => {
                positive("c", c)
            }
            RadiusRule::MaxRewardOne { c } => positive("c", c),
            RadiusRule::ScaledGaussian { sigma, c } => {
                positive("sigma", sigma).and(positive("c", c))
            }
            RadiusRule::StochBounded { rho, sigma, c } => {
                if !(rho > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "rho must be > 0, got {rho}"
                    )));
                }
                positive("sigma", sigma).and(positive("c", c))
            }
            RadiusRule::SharpPeak { alpha, c } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sharp-peak alpha must lie in (0, 1), got {alpha}"
                    )));
                }
                positive("c", c)
            }
            RadiusRule::HeavyTailed { a, c } => positive("a", a).and(positive("c", c)),
        }
    }

    /// Raw formula value for an arm with `n` plays and sample mean `mean`
    /// at round `t` (1-based, counted within the phase).
    pub fn raw(&self, i_ph: u32, n: u64, mean: f64, t: u64) -> Result<f64> {
        let i = i_ph as f64;
        let nf = n as f64;
        Ok(match *self {
            RadiusRule::Standard { c } => scaled_standard_radius(c, i_ph, n),
            RadiusRule::ScaledGaussian { sigma, c } => sigma * scaled_standard_radius(c, i_ph, n),
            RadiusRule::StochBounded { rho, sigma, c } => {
                let lambda_sq = c * i;
                if lambda_sq > 0.25 * (rho * sigma).powi(2) * nf {
                    f64::INFINITY
                } else {
                    sigma * scaled_standard_radius(c, i_ph, n)
                }
            }
            RadiusRule::PointMass { c } => c * i * 0.75f64.powf(nf),
            RadiusRule::SharpPeak { alpha, c } => {
                if n == 0 {
                    f64::INFINITY
                } else {
                    (c * i / nf).powf(1.0 / (1.0 - alpha))
                }
            }
            RadiusRule::Jump { c } => {
                if n == 0 {
                    f64::INFINITY
                } else {
                    c * i / nf
                }
            }
            RadiusRule::MaxRewardOne { c } => max_reward_one_radius(c * i, n, mean)?,
            RadiusRule::HeavyTailed { a, c } => {
                if n == 0 {
                    f64::INFINITY
                } else {
                    c * (t.max(1) as f64).powf(a) / nf.sqrt()
                }
            }
        })
    }
}

/// Effective radius after one more round, keeping
/// `(3/4) r_t <= r_{t+1} <= r_t` whatever the raw formula does.
pub fn clamp_radius(prev: f64, raw: f64) -> f64 {
    if prev.is_infinite() {
        raw
    } else {
        raw.max(0.75 * prev).min(prev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_is_unaffected_by_clamp() {
        let rule = RadiusRule::standard();
        let mut r = rule.raw(4, 0, 0.0, 1).unwrap();
        for n in 1..10_000u64 {
            let raw = rule.raw(4, n, 0.3, n + 1).unwrap();
            assert_eq!(clamp_radius(r, raw), raw);
            r = raw;
        }
    }

    #[test]
    fn point_mass_rule_is_slowed_to_three_quarters() {
        let rule = RadiusRule::PointMass { c: 1.0 };
        let r0 = rule.raw(2, 0, 0.0, 1).unwrap();
        assert_eq!(r0, 2.0);
        let r1 = rule.raw(2, 1, 0.0, 2).unwrap();
        assert_eq!(clamp_radius(r0, r1), 1.5);
    }

    #[test]
    fn stoch_bounded_floor() {
        let rule = RadiusRule::StochBounded {
            rho: 1.0,
            sigma: 1.0,
            c: 8.0,
        };
        // needs n >= 4 * 8 * 3 = 96 plays at i_ph = 3
        assert!(rule.raw(3, 95, 0.0, 1).unwrap().is_infinite());
        assert!(rule.raw(3, 96, 0.0, 1).unwrap().is_finite());
        let gaussian = RadiusRule::StochBounded {
            rho: f64::INFINITY,
            sigma: 0.5,
            c: 8.0,
        };
        assert_eq!(gaussian.raw(1, 0, 0.0, 1).unwrap(), 1.0);
    }

    #[test]
    fn unexplored_arms_have_infinite_radius() {
        for rule in [
            RadiusRule::SharpPeak { alpha: 0.5, c: 1.0 },
            RadiusRule::Jump { c: 1.0 },
            RadiusRule::HeavyTailed {
                a: 1.0 / 9.0,
                c: 1.0,
            },
        ] {
            assert!(rule.raw(1, 0, 0.0, 1).unwrap().is_infinite());
        }
    }

    #[test]
    fn serde_defaults() {
        let r: RadiusRule = serde_json::from_str(r#"{"kind":"max_reward_one"}"#).unwrap();
        assert_eq!(r, RadiusRule::max_reward_one());
        let h: RadiusRule = serde_json::from_str(r#"{"kind":"heavy_tailed"}"#).unwrap();
        assert_eq!(
            h,
            RadiusRule::HeavyTailed {
                a: 1.0 / 9.0,
                c: 1.0
            }
        );
    }
}
