use thiserror::Error;

/// Errors raised by the library. The CLI maps [`Error::Config`] to exit
/// status 2 and everything else to exit status 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point kind does not match metric: expected {expected}, got {got}")]
    KindMismatch { expected: &'static str, got: String },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid payoff: {0}")]
    InvalidPayoff(String),

    #[error("invalid reward model: {0}")]
    InvalidRewards(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("net of radius {radius} exceeded the cap of {cap} points")]
    NetCapExceeded { radius: f64, cap: usize },

    #[error("needle tower packing infeasible at level {level}: {reason}")]
    PackingInfeasible { level: usize, reason: String },

    #[error("discretization too coarse: {0}")]
    Discretization(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
