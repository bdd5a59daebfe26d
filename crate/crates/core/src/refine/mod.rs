//! Iterative refinement: classical and three-precision IR, MGS-GMRES,
//! GMRES-IR and Cholesky-preconditioned least squares.
//!
//! All solvers share [`IrConfig`] for the precision assignment and return an
//! [`IrReport`] with the full convergence history.

mod config;
mod gmres;
mod gmres_ir;
mod ir;
mod lsq;
mod prepare;

pub use config::{Inner, IrConfig, IrReport, Scaling, TriSolveFormat};
pub use gmres::{gmres, gmres_restarted, GmresOutput, GmresStatus};
pub use gmres_ir::gmres_ir_solve;
pub use ir::ir_solve;
pub use lsq::{lsq_backward_error, lsq_gmres_ir};

use thiserror::Error;

use crate::dense::{DenseError, DenseMatrix};

#[derive(Debug, Clone, Error)]
pub enum RefineError {
    #[error("factorization failed: {0}")]
    Factorization(#[from] DenseError),
    #[error("refinement diverged after {} iterations", .0.iterations)]
    Diverged(Box<IrReport>),
    #[error("matrix is numerically rank deficient (shifted Cholesky retry cap hit)")]
    RankDeficient,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Anything that can be multiplied by a vector in binary64 and has an
/// infinity norm; lets the error metrics work for dense and sparse matrices.
pub trait Operator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn norm_inf(&self) -> f64;
}

impl Operator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }

    fn norm_inf(&self) -> f64 {
        DenseMatrix::norm_inf(self)
    }
}

/// `‖b − A x‖_∞ / (‖A‖_∞ ‖x‖_∞ + ‖b‖_∞)` in binary64.
///
/// Returns 0 for a zero residual and `+∞` when the denominator vanishes but
/// the residual does not. Non-finite `x` gives NaN.
pub fn backward_error<A: Operator + ?Sized>(a: &A, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.apply(x);
    let num = ax.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((q - p).abs()));
    if x.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    if num == 0.0 {
        return 0.0;
    }
    let den = a.norm_inf() * crate::dense::norm_inf(x) + crate::dense::norm_inf(b);
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// `‖x − x_true‖_∞ / ‖x_true‖_∞`.
pub fn forward_error(x: &[f64], x_true: &[f64]) -> f64 {
    let num = x.iter().zip(x_true).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    num / crate::dense::norm_inf(x_true)
}

/// `‖I − VᵀV‖_F` in binary64.
pub fn orthogonality_defect(v: &DenseMatrix) -> f64 {
    let g = v.t_matmul(v);
    let mut s = 0.0;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let d = if i == j { 1.0 - g[(i, j)] } else { -g[(i, j)] };
            s += d * d;
        }
    }
    s.sqrt()
}

/// Power of two close to `‖v‖_∞`, or 1 for a zero vector.
///
/// Dividing by it is exact in binary64 and keeps a vector inside the range
/// of a narrow format without adding rounding error.
pub(crate) fn pow2_scale(v: &[f64]) -> f64 {
    let m = crate::dense::norm_inf(v);
    if m == 0.0 || !m.is_finite() {
        1.0
    } else {
        m.log2().floor().exp2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_error_of_exact_solutions() {
        let i = DenseMatrix::identity(3);
        assert_eq!(backward_error(&i, &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        let a = DenseMatrix::from_diag(&[2.0, 2.0]);
        assert_eq!(backward_error(&a, &[1.0, 1.0], &[2.0, 2.0]), 0.0);
    }

    #[test]
    fn backward_error_direct_formula() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 3.0]]);
        let b = [3.0, 3.0];
        let x = [1.0 + 1e-6, 1.0 - 2e-6];
        // r = b - A x = [-(2e-6 - 2e-6), 6e-6] = [0, 6e-6]; ‖A‖ = 3, ‖x‖ = 1 + 1e-6, ‖b‖ = 3.
        let expect = 6e-6 / (3.0 * (1.0 + 1e-6) + 3.0);
        let got = backward_error(&a, &x, &b);
        assert!((got - expect).abs() <= 1e-9 * expect, "{got} vs {expect}");
        let z = DenseMatrix::zeros(2, 2);
        assert_eq!(backward_error(&z, &[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(backward_error(&z, &[0.0, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn defect_examples() {
        assert_eq!(orthogonality_defect(&DenseMatrix::identity(4)), 0.0);
        let v = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        assert!((orthogonality_defect(&v) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pow2_scale_is_power_of_two() {
        for m in [1e-30, 0.3, 1.0, 7.5, 65504.0, 1e300] {
            let s = pow2_scale(&[m, -m / 3.0]);
            assert_eq!(s.log2().fract(), 0.0);
            assert!(m / s >= 1.0 && m / s < 2.0);
        }
        assert_eq!(pow2_scale(&[0.0]), 1.0);
    }
}
