use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone shape `f(x) = offset + scale * x^exponent` on `[0, 1]`.
///
/// A shaped descriptor measures `L_f(u, v) = f(L(u, v)) - f(0)`, which is
/// symmetric and vanishes on the diagonal but need not satisfy the triangle
/// inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub offset: f64,
    pub scale: f64,
    pub exponent: f64,
}

impl Shape {
    pub fn new(offset: f64, scale: f64, exponent: f64) -> Result<Self> {
        let ok = offset.is_finite()
            && scale.is_finite()
            && exponent.is_finite()
            && offset >= 0.0
            && scale > 0.0
            && exponent > 0.0
            && offset + scale <= 1.0 + 1e-12;
        if !ok {
            return Err(Error::InvalidMetric(format!(
                "shape needs offset >= 0, scale > 0, exponent > 0 and offset + scale <= 1 \
                 (got offset={offset}, scale={scale}, exponent={exponent})"
            )));
        }
        Ok(Self {
            offset,
            scale,
            exponent,
        })
    }

    /// `f(x) = x^exponent`.
    pub fn power(exponent: f64) -> Result<Self> {
        Self::new(0.0, 1.0, exponent)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.offset + self.scale * x.max(0.0).powf(self.exponent)
    }

    /// `f(x) - f(0)`.
    pub fn excess(&self, x: f64) -> f64 {
        self.scale * x.max(0.0).powf(self.exponent)
    }

    /// Radius `s` in the base metric with `{L < s} = {L_f < r}`.
    pub fn base_radius(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else if r.is_infinite() {
            f64::INFINITY
        } else {
            (r / self.scale).powf(1.0 / self.exponent)
        }
    }
}
