//! Dense matrices and emulated-precision dense kernels.
//!
//! Every kernel takes a [`Format`](crate::prec::Format) and rounds its inputs
//! onto that grid before doing any arithmetic, so results are always
//! representable in the requested format.

mod chol;
mod kernels;
mod lu;
mod matrix;
mod scaling;

pub use chol::{chol_emulated, chol_half, CholHalfResult, CHOL_HALF_MAX_DOUBLINGS};
pub use kernels::{gemm_emulated, tri_solve_emulated, tri_solve_transpose_emulated, Side};
pub use lu::{lu_emulated, LuFactors};
pub use matrix::{dot, norm2, norm_inf, DenseMatrix};
pub use scaling::{equilibrate, scale_round, ScaledHalf, DEFAULT_THETA};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DenseError {
    #[error("data length {found} does not match shape ({expected} entries expected)")]
    DataLength { expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("exact zero pivot in column {column}")]
    ExactZeroPivot { column: usize },
    #[error("non-finite value appeared at elimination step {step}")]
    OverflowInFactor { step: usize },
    #[error("matrix is not positive definite (pivot {index} failed)")]
    NotPositiveDefinite { index: usize },
    #[error("zero diagonal entry at index {index}")]
    ZeroDiagonal { index: usize },
    #[error("row or column {index} is entirely zero")]
    ZeroRowOrColumn { index: usize },
    #[error("matrix is zero")]
    ZeroMatrix,
    #[error("theta must lie in (0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("shifted Cholesky still failing after {doublings} doublings (c = {c})")]
    RetryCapExceeded { doublings: u32, c: u64 },
    #[error("diagonal entry {index} is not strictly positive")]
    NonpositiveDiagonal { index: usize },
}

pub(crate) fn require_square(a: &DenseMatrix) -> Result<usize, DenseError> {
    if a.is_square() {
        Ok(a.rows())
    } else {
        Err(DenseError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        })
    }
}
