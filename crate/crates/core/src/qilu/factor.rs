use super::fixed::{to_fixed, ONE};
use super::QiluError;
use crate::dense::{tri_solve_emulated, DenseMatrix, Side};
use crate::prec::Format;

/// Factors with `P (a / m) ≈ L U`; `perm[i]` is the row of `a` that lands in
/// row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QiluFactors {
    pub perm: Vec<usize>,
    pub l: DenseMatrix,
    pub u: DenseMatrix,
    pub m: f64,
    pub r: u32,
}

impl QiluFactors {
    /// Solve `a x = b` with binary64 triangular solves on the extracted
    /// factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, QiluError> {
        let n = self.perm.len();
        if b.len() != n {
            return Err(QiluError::DimensionMismatch { expected: n, found: b.len() });
        }
        let pb: Vec<f64> = self.perm.iter().map(|&p| b[p] / self.m).collect();
        let y = tri_solve_emulated(&self.l, &pb, Side::Lower, true, Format::FP64)?;
        Ok(tri_solve_emulated(&self.u, &y, Side::Upper, false, Format::FP64)?)
    }
}

/// LU with partial pivoting carried out entirely in integer arithmetic on the
/// fixed-point image of `a`.
///
/// Matrix entries stay 32-bit. Each column takes one 64-bit division
/// `α = ⌊2^62 / pivot⌋`; the multipliers `a_ji · α >> 30` are kept as 64-bit
/// values in the same `i / 2^32` scale, and the trailing update subtracts the
/// high word of `l_j · u_k`. Every updated entry is range-checked in 64 bits
/// before narrowing.
pub fn qilu_factor(a: &DenseMatrix, r: u32) -> Result<QiluFactors, QiluError> {
    let fixed = to_fixed(a, r)?;
    let n = fixed.n();
    let m = fixed.scale_m();
    let mut w = fixed.into_data();
    let mut mult = vec![0i64; n * n];
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let mut p = k;
        let mut best = i64::from(w[k * n + k]).abs();
        for i in k + 1..n {
            let v = i64::from(w[i * n + k]).abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0 {
            return Err(QiluError::ZeroPivot { column: k });
        }
        if p != k {
            for j in 0..n {
                w.swap(k * n + j, p * n + j);
                mult.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = i64::from(w[k * n + k]);
        let alpha = (1i64 << 62) / pivot;
        for i in k + 1..n {
            // |a_ik| ≤ |pivot| keeps the product within 2^62.
            let l = (i64::from(w[i * n + k]) * alpha) >> 30;
            mult[i * n + k] = l;
            w[i * n + k] = 0;
            if l == 0 {
                continue;
            }
            for j in k + 1..n {
                let u = i64::from(w[k * n + j]);
                // |l| ≤ 2^32 and |u| < 2^31, so the product fits in i64.
                let next = i64::from(w[i * n + j]) - ((l * u) >> 32);
                w[i * n + j] = i32::try_from(next).map_err(|_| QiluError::Overflowed { column: k })?;
            }
        }
    }

    let l = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => mult[i * n + j] as f64 / ONE,
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    });
    let u = DenseMatrix::from_fn(n, n, |i, j| if j >= i { f64::from(w[i * n + j]) / ONE } else { 0.0 });
    Ok(QiluFactors { perm, l, u, m, r })
}

/// `‖A x − b‖∞ / (‖A‖∞ ‖x‖∞)`, the normalized backward error used for
/// integer LU sweeps.
pub fn normalized_backward_error(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let res = ax.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let den = a.norm_inf() * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res == 0.0 {
        0.0
    } else {
        res / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prec::{op_count, reset_op_count};

    #[test]
    fn one_by_one_exact() {
        let f = qilu_factor(&DenseMatrix::from_rows(&[[0.5]]), 2).unwrap();
        assert_eq!(f.l, DenseMatrix::identity(1));
        assert_eq!(f.u[(0, 0)], 0.25);
        assert_eq!(f.m, 2.0);
        assert_eq!(f.solve(&[1.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn pivots_on_largest_integer() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [4.0, 1.0]]);
        let f = qilu_factor(&a, 3).unwrap();
        assert_eq!(f.perm, vec![1, 0]);
        assert_eq!(f.l[(1, 0)], 0.25);
        let x = f.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8, "{x:?}");
    }

    #[test]
    fn growth_overflows_at_small_range() {
        // Partial pivoting doubles the last column at every step.
        let n = 8;
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            if i == j || j == n - 1 {
                1.0
            } else if i > j {
                -1.0
            } else {
                0.0
            }
        });
        assert!(matches!(qilu_factor(&a, 2), Err(QiluError::Overflowed { .. })));
        let f = qilu_factor(&a, 10).unwrap();
        let b = vec![1.0; n];
        let x = f.solve(&b).unwrap();
        assert!(normalized_backward_error(&a, &x, &b) < 1e-6);
    }

    #[test]
    fn singular_detected() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]);
        assert_eq!(qilu_factor(&a, 4), Err(QiluError::ZeroPivot { column: 1 }));
    }

    #[test]
    fn deterministic_and_float_free() {
        let a = DenseMatrix::from_fn(12, 12, |i, j| ((i * 13 + j * 7) as f64).cos());
        reset_op_count();
        let f1 = qilu_factor(&a, 6).unwrap();
        assert_eq!(op_count(), 0);
        let f2 = qilu_factor(&a, 6).unwrap();
        assert_eq!(f1, f2);
    }
}
