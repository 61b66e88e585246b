use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The input does not carry the symmetry an operation requires.
    #[error("input is not {class} (residual {residual:e}, tolerance {tolerance:e})")]
    SymmetryViolation {
        class: &'static str,
        residual: f64,
        tolerance: f64,
    },

    /// An updated diagonal entry fell below `-delta * max_initial_diagonal`.
    #[error(
        "matrix is not positive semidefinite: updated diagonal {value:e} at index {index} \
         (step {step}, {evals} entry evaluations)"
    )]
    NotPositiveSemidefinite {
        index: usize,
        step: usize,
        value: f64,
        evals: u64,
    },

    #[error("non-finite entry at ({row}, {col}) after {evals} entry evaluations")]
    NonFinite { row: usize, col: usize, evals: u64 },

    #[error("truncation rank {requested} exceeds stored rank {available}")]
    Truncation { requested: usize, available: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
