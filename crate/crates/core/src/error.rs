use thiserror::Error;

/// Errors produced by mesh handling, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported polynomial degree {0} (expected 1 or 2)")]
    UnsupportedDegree(usize),

    #[error("cell {cell} is degenerate (signed area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("cell {cell} is inverted (signed area {area:e})")]
    InvertedCell { cell: usize, area: f64 },

    #[error("mesh validation failed: {0}")]
    InvalidMesh(String),

    #[error("mesh file error: {0}")]
    MeshFormat(String),

    #[error("mesh generation failed: {0}")]
    MeshGeneration(String),

    #[error("nonpositive time step {0}")]
    NonpositiveDt(f64),

    #[error("node count mismatch: {0} vs {1}")]
    NodeCountMismatch(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear solver did not converge: residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing BDF-2 history (u at t^(n-1))")]
    MissingHistory,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
