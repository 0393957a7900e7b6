use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("accuracy loss in {context}: estimated relative error {estimate:e}")]
    AccuracyLoss { context: String, estimate: f64 },

    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("fixed-point iteration did not converge at step {step} (t = {time}): {detail}")]
    NonConvergence { step: usize, time: f64, detail: String },

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
