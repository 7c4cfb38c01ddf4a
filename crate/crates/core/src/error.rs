use thiserror::Error;

/// Errors raised by the simulator and its numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration or model parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A function argument lies outside the mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical step produced a non-finite or otherwise unusable value.
    #[error("computation error: {0}")]
    Computation(String),
    /// An internal invariant was broken. Always a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
