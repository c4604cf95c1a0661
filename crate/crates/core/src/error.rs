use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("offset calibration did not converge after {iterations} iterations (last residual {residual:e})")]
    Calibration { iterations: usize, residual: f64 },

    #[error("singular three-level expression ({equation}): {reason}")]
    Singular { equation: &'static str, reason: &'static str },

    #[error("finite-field fit is ill conditioned: {0}")]
    IllConditioned(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
