use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation `{operation}` is undefined for driving mode {mode}")]
    UndefinedForMode { operation: &'static str, mode: String },

    #[error("coupling is singular: {0}")]
    Singularity(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("step rejected at t = {time}: norm drift {drift:e} exceeds {limit:e}")]
    StepRejected { time: f64, drift: f64, limit: f64 },

    #[error("time step fell below the floor {floor:e} at t = {time}")]
    StepUnderflow { time: f64, floor: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("backend cannot provide {0}")]
    Capability(&'static str),

    #[error("outside the model domain: {0}")]
    Domain(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
