use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps `Input` to exit code 2; every other variant also exits with 2
/// because it means the requested computation could not be carried out.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, bad exponent, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Input is well-formed but outside the domain of the operation
    /// (zero vector where a non-zero one is required, zero operator, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The one-sided quotient did not settle within the step schedule.
    #[error("numeric error: {message}")]
    Numeric {
        message: String,
        trace: Vec<(f64, f64)>,
    },

    /// A result that contradicts the theory the library implements.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
