use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian: max |A(i,j) - conj(A(j,i))| = {asymmetry:e}")]
    NonHermitian { asymmetry: f64 },

    #[error("matrix violates the unimodular condition: {0}")]
    NotUnimodular(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("enumeration guard exceeded: {count} candidate paths > limit {limit}")]
    GuardExceeded { count: f64, limit: f64 },

    #[error("oracle out of scope: {0}")]
    OracleOutOfScope(String),

    #[error("invalid diagram `{name}`: {reason}")]
    InvalidDiagram { name: String, reason: String },

    #[error("infeasible constraint system: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("argument {x} outside the supported range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
