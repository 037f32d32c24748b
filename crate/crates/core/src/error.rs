use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate sign split: all mass on one side of zero")]
    DegenerateSplit,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("gcd undefined: positive support is empty")]
    UndefinedGcd,
    #[error("truncation too small: leak {leak:.3e} at t={t:.3}; try n_max >= {suggested}")]
    TruncationTooSmall { leak: f64, t: f64, suggested: usize },
    #[error("not converged: {0}")]
    Unconverged(String),
    #[error("p_0 underflow at t={0}")]
    P0Underflow(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no composition reaches norm level {0}")]
    NoComposition(String),
    #[error("enumeration too large: estimated cost {estimate:.3e} exceeds budget {budget:.3e}")]
    CostExceeded { estimate: f64, budget: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
