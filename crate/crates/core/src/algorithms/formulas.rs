//! Closed-form confidence radii and indices.

use crate::error::{Error, Result};

/// `sqrt(8 i_ph / (2 + n))`.
pub fn standard_radius(i_ph: u32, n: u64) -> f64 {
    scaled_standard_radius(8.0, i_ph, n)
}

/// `sqrt(c i_ph / (2 + n))`.
pub fn scaled_standard_radius(c: f64, i_ph: u32, n: u64) -> f64 {
    (c * i_ph as f64 / (2.0 + n as f64)).sqrt()
}

/// Optimistic index `mu_t + 2 r_t`.
pub fn index(mu_t: f64, r_t: f64) -> f64 {
    mu_t + 2.0 * r_t
}

/// `alpha/(1+n) + sqrt(alpha (1 - mu_t) / (1+n))`, for rewards in `[0, 1]`.
pub fn max_reward_one_radius(alpha: f64, n: u64, mu_t: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    if !(0.0..=1.0).contains(&mu_t) {
        return Err(Error::InvalidParameter(format!(
            "sample mean {mu_t} outside [0, 1]; this radius needs rewards supported on [0, 1]"
        )));
    }
    let m = 1.0 + n as f64;
    Ok(alpha / m + (alpha * (1.0 - mu_t) / m).sqrt())
}

/// `alpha/n + sqrt(alpha x / n)`.
pub fn chernoff_radius(alpha: f64, n: u64, x: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "chernoff radius needs n >= 1".into(),
        ));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "chernoff radius needs x >= 0, got {x}"
        )));
    }
    let n = n as f64;
    Ok(alpha / n + (alpha * x / n).sqrt())
}

/// Net scale `phase_len^(-1/(d+2))` of the naive algorithm.
pub fn naive_delta(phase_len: u64, d: f64) -> f64 {
    (phase_len as f64).powf(-1.0 / (d + 2.0))
}

/// UCB1 index `mean + sqrt(2 ln t / n)`.
pub fn ucb1_index(mean: f64, t: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    mean + (2.0 * (t as f64).ln() / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_values() {
        assert_eq!(standard_radius(1, 0), 2.0);
        assert_eq!(standard_radius(2, 14), 1.0);
        assert_eq!(index(0.5, 0.25), 1.0);
        assert_eq!(index(0.0, standard_radius(1, 0)), 4.0);
        assert!(
            (max_reward_one_radius(8.0, 3, 0.75).unwrap() - (2.0 + 0.5f64.sqrt())).abs() < 1e-15
        );
        assert_eq!(
            max_reward_one_radius(8.0, 0, 0.0).unwrap(),
            8.0 + 8f64.sqrt()
        );
        assert_eq!(chernoff_radius(4.0, 16, 1.0).unwrap(), 0.75);
        assert_eq!(naive_delta(4096, 2.0), 0.125);
    }

    #[test]
    fn domain_errors() {
        assert!(max_reward_one_radius(8.0, 1, 1.2).is_err());
        assert!(max_reward_one_radius(8.0, 1, -0.1).is_err());
        assert!(chernoff_radius(1.0, 0, 0.5).is_err());
    }

    #[test]
    fn standard_radius_decreases_to_zero() {
        let mut prev = f64::INFINITY;
        for n in (0..1_000_000).step_by(997) {
            let r = standard_radius(3, n);
            assert!(r < prev);
            prev = r;
        }
        assert!(prev < 0.01);
    }
}
