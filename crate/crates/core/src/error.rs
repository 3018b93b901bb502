use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported mesh request: {0}")]
    UnsupportedDomain(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{path}:{line}:{column}: {message}")]
    MeshParse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("degenerate cell {cell}: volume {volume:e}")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("material out of theory: kappa_* = {kappa_min}, kappa^* = {kappa_max} straddle 1")]
    OutOfTheory { kappa_min: f64, kappa_max: f64 },

    #[error("mesh has no interior vertices")]
    EmptyInterior,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically singular at column {column}")]
    SingularMatrix { column: usize },

    #[error("shift {shift} hits the spectrum after {attempts} perturbations")]
    SingularShift { shift: f64, attempts: usize },

    #[error("dense eigensolver did not converge after {iterations} iterations")]
    DenseNoConvergence { iterations: usize },

    #[error("problem too large for the dense oracle: {size} > {limit}")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
