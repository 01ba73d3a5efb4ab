use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("measure is not isotropic: {0}")]
    NotIsotropic(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("parse error at character {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("unknown oracle `{0}`")]
    UnknownOracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
