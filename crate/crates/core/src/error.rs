use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("graph is disconnected")]
    Disconnected,

    /// λ_min of the Gram sum is (numerically) zero, so the plain system is singular.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// λ_{n-1} of the Gram sum is (numerically) zero in the centered setting.
    #[error("under-determined system: {0}")]
    UnderDetermined(String),

    #[error("size limit exceeded: {size} > {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
