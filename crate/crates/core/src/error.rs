//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("instance too large: {entries} entries exceeds the cap of {cap}")]
    TooLarge { entries: u128, cap: u128 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("Kraus set is not trace preserving (defect {0:e})")]
    NotTracePreserving(f64),

    #[error("operator is not unitary (defect {0:e})")]
    NotUnitary(f64),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("count mismatch: {0}")]
    CountMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coherent frame is numerically singular (smallest Gram eigenvalue {0:e})")]
    FrameConditioning(f64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
