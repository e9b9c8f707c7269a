use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::simulator::RegretCurve;

pub const CSV_HEADER: &str = "t,mean_regret,stderr,replications";

/// Float with 17 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // one spelling for both signed zeros
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

pub fn curve_csv(curve: &RegretCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.t,
            fmt_float(p.mean),
            fmt_float(p.stderr),
            curve.replications
        ));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
