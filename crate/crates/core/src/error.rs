use thiserror::Error;

/// Errors raised by the approximation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A function or integrand produced a non-finite value at a node.
    #[error("non-finite value {value} at ({x1}, {x2})")]
    NumericDomain { x1: f64, x2: f64, value: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("unknown function `{0}`")]
    Lookup(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
