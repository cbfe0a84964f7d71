use thiserror::Error;

/// Errors raised by game construction, mechanism evaluation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("creator index {index} out of range for {n} creators")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("game has no reward mechanism attached")]
    MechanismUnset,

    #[error("operation requires a backward rewarding mechanism, got {0}")]
    NotBackwardRewarding(&'static str),

    #[error("enumeration needs {needed} checks, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("action space of creator {0} is not finite")]
    NonFiniteActionSpace(usize),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
