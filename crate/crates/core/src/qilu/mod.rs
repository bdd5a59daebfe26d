//! LU factorization with partial pivoting in 32-bit fixed-point integer
//! arithmetic, where an integer `i` represents `i / 2^32`.

mod factor;
mod fixed;

pub use factor::{normalized_backward_error, qilu_factor, QiluFactors};
pub use fixed::{mulhi32, to_fixed, FixedPointMatrix, ONE};

use crate::dense::DenseError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QiluError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is zero")]
    ZeroMatrix,
    #[error("range exponent r = {0} exceeds 31")]
    InvalidRange(u32),
    #[error("fixed-point overflow while eliminating column {column}")]
    Overflowed { column: usize },
    #[error("zero pivot in column {column}")]
    ZeroPivot { column: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Solve(#[from] DenseError),
}
