use serde::{Deserialize, Serialize};

use super::RegretCurve;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.5;

/// Least-squares slope of `ln R` against `ln t` over a tail window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// `None` when the window holds a zero regret.
    pub gamma: Option<f64>,
    pub t_start: u64,
    pub t_end: u64,
    pub points: usize,
    /// Root-mean-square residual in log space.
    pub residual: Option<f64>,
}

pub fn fit_exponent(curve: &RegretCurve, window_fraction: f64) -> Result<ExponentFit> {
    if !(window_fraction > 0.0 && window_fraction < 1.0) {
        return Err(Error::Fit(format!(
            "window fraction must lie in (0, 1), got {window_fraction}"
        )));
    }
    let n = curve.points.len();
    if n < 8 {
        return Err(Error::Fit(format!("need at least 8 checkpoints, got {n}")));
    }
    let k = (window_fraction * n as f64).ceil() as usize;
    if k < 5 {
        return Err(Error::Fit(format!(
            "window of {k} checkpoints is below the minimum of 5"
        )));
    }
    let window = &curve.points[n - k..];
    let mut fit = ExponentFit {
        gamma: None,
        t_start: window[0].t,
        t_end: window[k - 1].t,
        points: k,
        residual: None,
    };
    if window.iter().any(|p| !(p.mean > 0.0)) {
        return Ok(fit);
    }
    let xs: Vec<f64> = window.iter().map(|p| (p.t as f64).ln()).collect();
    let ys: Vec<f64> = window.iter().map(|p| p.mean.ln()).collect();
    let kf = k as f64;
    let mx = xs.iter().sum::<f64>() / kf;
    let my = ys.iter().sum::<f64>() / kf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - icept - slope * x).powi(2))
        .sum();
    fit.gamma = Some(slope);
    fit.residual = Some((ss / kf).sqrt());
    Ok(fit)
}
