use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input (shape, dimension, symmetry).
    #[error("validation error: {0}")]
    Validation(String),
    /// An operation's precondition does not hold.
    #[error("contract violated: {0}")]
    Contract(String),
    /// A configured size cap would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The SDP solver did not reach the requested accuracy.
    #[error(
        "solver did not converge after {iterations} iterations \
         (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e}, gap {gap:.3e})"
    )]
    Solver {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },
    /// A serialized file could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
