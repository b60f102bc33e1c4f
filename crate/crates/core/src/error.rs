use std::io;

use thiserror::Error;

/// Errors raised by grid construction, transforms and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grids differ")]
    GridMismatch,

    #[error("point lies on the singular set of the family")]
    SingularPoint,

    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    AsymmetricMatrix(f64),

    #[error("quadric form is degenerate ({zero} zero eigenvalues); use the hybrid inversion")]
    DegenerateQuadric { zero: usize },

    #[error("hybrid quadric requires a declared split into quadratic and linear axes")]
    MissingSplit,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("family tag mismatch: file has {found}, expected {expected}")]
    TagMismatch { expected: String, found: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
