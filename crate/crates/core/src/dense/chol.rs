use super::kernels::{tri_solve_emulated, tri_solve_transpose_emulated, Side};
use super::{require_square, DenseError, DenseMatrix};
use crate::prec::{Arith, Format};

/// Number of times [`chol_half`] doubles its shift before giving up.
pub const CHOL_HALF_MAX_DOUBLINGS: u32 = 20;

/// Output of [`chol_half`]: `r_factor^T r_factor ≈ mu * D^-1 A D^-1`
/// (plus the diagonal shift that was needed), with `D = diag(d_scale)`.
#[derive(Debug, Clone)]
pub struct CholHalfResult {
    pub r_factor: DenseMatrix,
    pub d_scale: Vec<f64>,
    pub mu: f64,
    /// Shift multiplier `c` of the attempt that succeeded.
    pub c_final: u64,
    pub fmt: Format,
    pub attempts: u32,
}

impl CholHalfResult {
    /// Approximate `A^-1 b = mu * D^-1 R^-1 R^-T D^-1 b`, substitutions in `fmt`.
    pub fn solve(&self, b: &[f64], fmt: Format) -> Result<Vec<f64>, DenseError> {
        let ar = Arith::new(fmt);
        let y: Vec<f64> = b.iter().zip(&self.d_scale).map(|(bi, di)| ar.round(bi / di)).collect();
        let y = tri_solve_transpose_emulated(&self.r_factor, &y, Side::Upper, false, fmt)?;
        let y = tri_solve_emulated(&self.r_factor, &y, Side::Upper, false, fmt)?;
        Ok(y
            .iter()
            .zip(&self.d_scale)
            .map(|(yi, di)| ar.round(self.mu * yi / di))
            .collect())
    }
}

/// Upper-triangular `R` with `R^T R ≈ A`, every operation rounded to `fmt`.
///
/// The input is symmetrized as `(A + A^T) / 2` in binary64 and rounded to
/// `fmt`. A pivot that is not strictly positive, or any non-finite value in
/// the factor, is reported with the 0-based index of the failing step.
pub fn chol_emulated(a: &DenseMatrix, fmt: Format) -> Result<DenseMatrix, DenseError> {
    let n = require_square(a)?;
    let ar = Arith::new(fmt);
    let mut w = a.symmetrized().rounded(&ar);
    let mut r = DenseMatrix::zeros(n, n);

    for k in 0..n {
        let pivot = w[(k, k)];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(DenseError::NotPositiveDefinite { index: k });
        }
        let rkk = ar.sqrt(pivot);
        r[(k, k)] = rkk;
        for j in k + 1..n {
            let v = ar.div(w[(k, j)], rkk);
            if !v.is_finite() {
                return Err(DenseError::NotPositiveDefinite { index: k });
            }
            r[(k, j)] = v;
        }
        // Trailing update of the upper triangle only.
        for i in k + 1..n {
            let rki = r[(k, i)];
            if rki == 0.0 {
                continue;
            }
            for j in i..n {
                w[(i, j)] = ar.sub(w[(i, j)], ar.mul(rki, r[(k, j)]));
            }
        }
    }
    Ok(r)
}

/// Cholesky factorization of a diagonally scaled, shifted and range-scaled
/// copy of `a` in a narrow format.
///
/// With `D = diag(a_ii)^(1/2)`, `H = D^-1 A D^-1` (unit diagonal set
/// exactly), the attempt at shift `c` factorizes
/// `round(mu * (H + c u I))` with `mu = theta * x_max / (1 + c u)`.
/// Starting at `c0`, `c` doubles after every failure, at most
/// [`CHOL_HALF_MAX_DOUBLINGS`] times.
pub fn chol_half(a: &DenseMatrix, theta: f64, c0: u64, fmt: Format) -> Result<CholHalfResult, DenseError> {
    let n = require_square(a)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DenseError::InvalidTheta(theta));
    }
    let c0 = c0.max(1);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let aii = a[(i, i)];
        if !(aii > 0.0) || !aii.is_finite() {
            return Err(DenseError::NonpositiveDiagonal { index: i });
        }
        d.push(aii.sqrt());
    }
    let sym = a.symmetrized();
    let h = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { sym[(i, j)] / (d[i] * d[j]) });

    let u = fmt.unit_roundoff();
    let ar = Arith::new(fmt);
    let mut c = c0;
    for attempt in 0..=CHOL_HALF_MAX_DOUBLINGS {
        let shift = c as f64 * u;
        let beta = 1.0 + shift;
        let mu = theta * fmt.x_max() / beta;
        let a_h = DenseMatrix::from_fn(n, n, |i, j| {
            let g = if i == j { h[(i, j)] + shift } else { h[(i, j)] };
            ar.round(mu * g)
        });
        match chol_emulated(&a_h, fmt) {
            Ok(r_factor) => {
                return Ok(CholHalfResult {
                    r_factor,
                    d_scale: d,
                    mu,
                    c_final: c,
                    fmt,
                    attempts: attempt + 1,
                })
            }
            Err(DenseError::NotPositiveDefinite { .. }) => c *= 2,
            Err(e) => return Err(e),
        }
    }
    Err(DenseError::RetryCapExceeded {
        doublings: CHOL_HALF_MAX_DOUBLINGS,
        c: c / 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor() {
        for fmt in [Format::FP16, Format::FP32, Format::FP64] {
            assert_eq!(chol_emulated(&DenseMatrix::identity(8), fmt).unwrap(), DenseMatrix::identity(8));
        }
    }

    #[test]
    fn tiny_pivot_underflows_in_fp16() {
        let a = DenseMatrix::from_diag(&[1.0, 1e-9]);
        assert_eq!(
            chol_emulated(&a, Format::FP16).unwrap_err(),
            DenseError::NotPositiveDefinite { index: 1 }
        );
        assert!(chol_emulated(&a, Format::FP64).is_ok());
    }

    #[test]
    fn small_spd_by_hand() {
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 5.0]]);
        let r = chol_emulated(&a, Format::FP64).unwrap();
        assert_eq!(r, DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]));
    }

    #[test]
    fn indefinite_rejected() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert_eq!(
            chol_emulated(&a, Format::FP64).unwrap_err(),
            DenseError::NotPositiveDefinite { index: 1 }
        );
    }

    #[test]
    fn chol_half_identity() {
        let fmt = Format::FP16;
        let res = chol_half(&DenseMatrix::identity(10), 0.1, 1, fmt).unwrap();
        assert_eq!(res.c_final, 1);
        assert_eq!(res.attempts, 1);
        let u = fmt.unit_roundoff();
        let expect = (res.mu * (1.0 + u)).sqrt();
        let ar = Arith::new(fmt);
        for i in 0..10 {
            let rii = res.r_factor[(i, i)];
            assert!((rii - expect).abs() <= 2.0 * u * expect, "{rii} vs {expect}");
            assert_eq!(rii, ar.round(rii));
        }
    }

    #[test]
    fn chol_half_rejects_bad_diagonal() {
        let a = DenseMatrix::from_diag(&[1.0, 0.0]);
        assert_eq!(
            chol_half(&a, 0.1, 2, Format::FP16).unwrap_err(),
            DenseError::NonpositiveDiagonal { index: 1 }
        );
    }

    #[test]
    fn chol_half_solve_inverts_diagonal() {
        let a = DenseMatrix::from_diag(&[4.0, 9.0]);
        let res = chol_half(&a, 0.1, 2, Format::FP64).unwrap();
        let x = res.solve(&[4.0, 9.0], Format::FP64).unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-12);
        }
    }
}
