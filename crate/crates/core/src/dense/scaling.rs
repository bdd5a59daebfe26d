use super::{DenseError, DenseMatrix};
use crate::prec::{Arith, Format};

/// Fraction of the format's range that scaled matrices are mapped onto.
pub const DEFAULT_THETA: f64 = 0.1;

/// A matrix scaled two-sidedly and rounded into a narrow format:
/// `a_h = round(mu * diag(r_scale) * A * diag(s_scale))`.
#[derive(Debug, Clone)]
pub struct ScaledHalf {
    pub a_h: DenseMatrix,
    pub mu: f64,
    pub r_scale: Vec<f64>,
    pub s_scale: Vec<f64>,
    pub fmt: Format,
}

impl ScaledHalf {
    /// Right-hand side of the scaled system: `mu * R * b`.
    pub fn scale_rhs(&self, b: &[f64]) -> Vec<f64> {
        b.iter().zip(&self.r_scale).map(|(bi, ri)| self.mu * ri * bi).collect()
    }

    /// Map a solution `y` of the scaled system back: `x = S * y`.
    pub fn unscale_solution(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.s_scale).map(|(yi, si)| si * yi).collect()
    }
}

/// One row pass followed by one column pass of max-norm equilibration.
///
/// Afterwards every column of `diag(r) * A * diag(s)` has maximum modulus 1
/// (up to the rounding of a reciprocal), and every row has maximum modulus
/// at most 1.
pub fn equilibrate(a: &DenseMatrix) -> Result<(Vec<f64>, Vec<f64>), DenseError> {
    let mut r = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let m = a.row(i).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return Err(DenseError::ZeroRowOrColumn { index: i });
        }
        r.push(1.0 / m);
    }
    let mut colmax = vec![0.0f64; a.cols()];
    for (i, ri) in r.iter().enumerate() {
        for (c, x) in colmax.iter_mut().zip(a.row(i)) {
            *c = c.max((ri * x).abs());
        }
    }
    let mut s = Vec::with_capacity(a.cols());
    for (j, &c) in colmax.iter().enumerate() {
        if c == 0.0 {
            return Err(DenseError::ZeroRowOrColumn { index: j });
        }
        s.push(1.0 / c);
    }
    Ok((r, s))
}

/// Scale `diag(r) A diag(s)` so that its largest entry is `theta * x_max`,
/// then round it to `fmt`.
///
/// No entry of the result is infinite: if rounding would overflow (possible
/// only for `theta` at or near 1 under directed rounding) `mu` is reduced
/// until it does not.
pub fn scale_round(
    a: &DenseMatrix,
    r_scale: &[f64],
    s_scale: &[f64],
    theta: f64,
    fmt: Format,
) -> Result<ScaledHalf, DenseError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DenseError::InvalidTheta(theta));
    }
    if r_scale.len() != a.rows() || s_scale.len() != a.cols() {
        return Err(DenseError::DimensionMismatch(format!(
            "{}x{} matrix with scalings of length {} and {}",
            a.rows(),
            a.cols(),
            r_scale.len(),
            s_scale.len()
        )));
    }
    let b = DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| r_scale[i] * a[(i, j)] * s_scale[j]);
    let beta = b.max_abs();
    if beta == 0.0 {
        return Err(DenseError::ZeroMatrix);
    }
    let ar = Arith::new(fmt);
    let mut mu = theta * fmt.x_max() / beta;
    loop {
        let a_h = b.map(|x| ar.round(mu * x));
        if a_h.is_finite() {
            return Ok(ScaledHalf {
                a_h,
                mu,
                r_scale: r_scale.to_vec(),
                s_scale: s_scale.to_vec(),
                fmt,
            });
        }
        mu *= 1.0 - fmt.unit_roundoff();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_magnitudes_need_no_scaling() {
        let a = DenseMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]);
        let (r, s) = equilibrate(&a).unwrap();
        assert_eq!(r, vec![1.0, 1.0]);
        assert_eq!(s, vec![1.0, 1.0]);
    }

    #[test]
    fn columns_reach_unit_max() {
        let a = DenseMatrix::from_rows(&[[100.0, 1.0], [1.0, 0.01]]);
        let (r, s) = equilibrate(&a).unwrap();
        for j in 0..2 {
            let m = (0..2).map(|i| (r[i] * a[(i, j)] * s[j]).abs()).fold(0.0, f64::max);
            assert!((m - 1.0).abs() <= 2.0 * f64::EPSILON, "column {j}: {m}");
        }
    }

    #[test]
    fn zero_row_rejected() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 0.0]]);
        assert_eq!(equilibrate(&a).unwrap_err(), DenseError::ZeroRowOrColumn { index: 1 });
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]);
        assert_eq!(equilibrate(&a).unwrap_err(), DenseError::ZeroRowOrColumn { index: 1 });
    }

    #[test]
    fn theta_one_maps_to_x_max() {
        let a = DenseMatrix::from_rows(&[[1.0]]);
        let h = scale_round(&a, &[1.0], &[1.0], 1.0, Format::FP16).unwrap();
        assert_eq!(h.mu, 65504.0);
        assert_eq!(h.a_h[(0, 0)], 65504.0);
    }

    #[test]
    fn theta_validated() {
        let a = DenseMatrix::identity(2);
        for t in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(scale_round(&a, &[1.0; 2], &[1.0; 2], t, Format::FP16).is_err());
        }
        let z = DenseMatrix::zeros(2, 2);
        assert_eq!(
            scale_round(&z, &[1.0; 2], &[1.0; 2], 0.1, Format::FP16).unwrap_err(),
            DenseError::ZeroMatrix
        );
    }

    #[test]
    fn directed_rounding_at_full_range_stays_finite() {
        let fmt = Format::FP16.with_rounding(crate::prec::Rounding::TowardPositive);
        let a = DenseMatrix::from_rows(&[[3.0, 1.0], [1.0, 7.0]]);
        let h = scale_round(&a, &[1.0; 2], &[1.0; 2], 1.0, fmt).unwrap();
        assert!(h.a_h.is_finite());
    }
}
