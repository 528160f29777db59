use std::path::PathBuf;

use thiserror::Error;

pub use crate::refine::RefineTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative drop threshold {0}")]
    NegativeThreshold(f64),

    #[error("matrix is not positive definite (eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix must be square for this operation ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("initial factorization error {0} >= 1, refinement would not converge")]
    RefinementRefused(f64),

    #[error("refinement did not reach the tolerance within {} iterations", .0.iterations)]
    NotConverged(Box<RefineTrace>),

    #[error("refinement produced a non-finite error norm")]
    NonFinite,

    #[error("empty geometry")]
    EmptyGeometry,

    #[error("correction capture was not enabled for this run")]
    CaptureDisabled,

    #[error("degenerate least-squares design matrix")]
    DegenerateDesign,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
