use thiserror::Error;

/// Errors raised by kernel, operator, and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The order sits on a pole of the Gamma function (0, -1, -2, ...).
    #[error("order {alpha} is a nonpositive integer; Gamma has a pole there")]
    Pole { alpha: f64 },

    /// A certified truncation bound is larger than the tolerance the caller asked for.
    #[error("window too small: tail bound {bound:e} exceeds tolerance {tol:e}")]
    WindowTooSmall { bound: f64, tol: f64 },

    /// Values outside the window are needed but the extension policy does not supply them.
    #[error("extension required: {0}")]
    ExtensionRequired(String),

    /// The input is not admissible for a fractional integral of this order.
    #[error("input not in the admissible class for order {order}: {reason}")]
    NotInDomain { order: f64, reason: String },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("Schauder case constraint violated: {0}")]
    CaseConstraintViolated(String),

    /// Two independent evaluation routes disagreed beyond tolerance.
    #[error("cross-check failed: {what} deviates by {deviation:e} (tolerance {tol:e})")]
    CrossCheck { what: String, deviation: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate index {index} at line {line}")]
    DuplicateIndex { index: i64, line: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
