use thiserror::Error;

/// Errors surfaced by model construction, inference, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two inputs that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A task cannot be assigned the requested number of workers.
    #[error("assignment infeasible: {0}")]
    AssignmentInfeasible(String),

    /// Experiment configuration is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A data file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::AssignmentInfeasible(msg.into())
    }
}
