//! Symmetric eigenproblems: an emulated-precision Jacobi solver for initial
//! approximations, block refinement of all pairs and single-pair refinement
//! by linear solves.

mod jacobi;
mod refsyev;
mod sice;

pub use jacobi::{jacobi_eig, MAX_SWEEPS};
pub use refsyev::{refine_syev, refine_syev_with, OmegaNorm, RefineStep};
pub use sice::{sice_refine, SiceResult};

use crate::dense::{norm2, DenseError, DenseMatrix};
use crate::prec::Format;
use thiserror::Error;

/// Approximate eigenpairs: column `j` of `x` belongs to `lambda[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub x: DenseMatrix,
    pub lambda: Vec<f64>,
    /// Format the approximations were computed in.
    pub fmt: Format,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Jacobi iteration did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("non-finite value during Jacobi sweep {sweep}")]
    NonFinite { sweep: usize },
    #[error("column-replaced system is singular at iteration {iteration}")]
    SingularB { iteration: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
}

fn check_symmetric(a: &DenseMatrix) -> Result<(), EigError> {
    if !a.is_square() {
        return Err(EigError::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    for i in 0..n {
        for j in 0..i {
            if a[(i, j)] != a[(j, i)] {
                return Err(EigError::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// `‖A x_j − λ_j x_j‖₂ / (‖A‖₂ ‖x_j‖₂)` for every column, with `‖A‖₂`
/// estimated by power iteration.
pub fn pair_residuals(a: &DenseMatrix, pairs: &EigenPairs) -> Vec<f64> {
    let norm_a = a.norm2_estimate();
    let ax = a.matmul(&pairs.x);
    (0..pairs.x.cols())
        .map(|j| {
            let xj = pairs.x.col(j);
            let r: Vec<f64> = ax.col(j).iter().zip(&xj).map(|(p, q)| p - pairs.lambda[j] * q).collect();
            let den = norm_a * norm2(&xj);
            if den == 0.0 {
                f64::INFINITY
            } else {
                norm2(&r) / den
            }
        })
        .collect()
}
