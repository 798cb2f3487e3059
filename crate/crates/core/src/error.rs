use thiserror::Error;

/// Errors raised by the simulation and inference routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("paraxial approximation violated: (|x0|+s)/z0 = {ratio:.3e} exceeds limit {limit:.3e}")]
    ParaxialViolation { ratio: f64, limit: f64 },

    #[error("source weights must be non-negative and sum to 1 (sum = {0})")]
    WeightNormalization(f64),

    #[error("finite-difference step too large: h*k*d = {0:.3e} > 0.1")]
    StepTooLarge(f64),

    #[error("grid under-resolved: sigma spans {0:.2} cells, need at least 16")]
    GridUnderResolved(f64),

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("no counts recorded")]
    EmptyCounts,

    #[error("posterior is flat; no maximum to extract")]
    FlatPosterior,

    #[error("support violation: alternative hypothesis assigns zero probability to an observable outcome")]
    SupportViolation,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
