//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("damping hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("numerical blowup at t = {t}: {what}")]
    Blowup { t: f64, what: String },
    #[error("sample data rejected: {0}")]
    Samples(String),
    #[error("exponent out of scope: {0}")]
    OutOfScope(String),
    #[error("root solve failed: {0}")]
    RootSolve(String),
}

pub type Result<T> = std::result::Result<T, WaveError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(WaveError::InvalidParameter(msg.into()))
}
