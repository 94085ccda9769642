use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a documented precondition. The message names the
    /// violated constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested quantity is infinite (e.g. the time-integrated kernel at
    /// the origin when d > alpha).
    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("numerical non-convergence: {what} (achieved error estimate {error_estimate:e})")]
    NonConvergence { what: String, error_estimate: f64 },

    /// A request exceeds what the implementation can represent, e.g. offspring
    /// counts beyond the sampler's reach.
    #[error("capability limit: {0}")]
    CapabilityLimit(String),

    #[error("inconsistent input: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
