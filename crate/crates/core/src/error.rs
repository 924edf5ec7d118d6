use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// print a one-line diagnostic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("stability index must lie in (0, 2), got {0}")]
    InvalidAlpha(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not enough samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("walk truncated after {steps} steps")]
    StepCap { steps: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
