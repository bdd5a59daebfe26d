use super::QiluError;
use crate::dense::DenseMatrix;

/// `2^32`, the denominator of the fixed-point representation `R(i) = i / 2^32`.
pub const ONE: f64 = 4_294_967_296.0;

/// High word of the 64-bit product: `(i * j) >> 32`, rounded toward
/// negative infinity. In fixed point this is `R(i) * R(j) = R(mulhi32(i, j))`
/// up to truncation of the discarded low word.
#[inline]
pub fn mulhi32(i: i32, j: i32) -> i32 {
    ((i64::from(i) * i64::from(j)) >> 32) as i32
}

/// Square matrix of 32-bit fixed-point values together with the scale that
/// maps them back: `a_ij ≈ scale_m * data[i * n + j] / 2^32`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointMatrix {
    n: usize,
    data: Vec<i32>,
    /// Normalization `m = max|a_ij| * 2^r`, stored as raw bits so the
    /// struct stays `Eq`.
    scale_bits: u64,
    range_r: u32,
}

impl FixedPointMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn scale_m(&self) -> f64 {
        f64::from_bits(self.scale_bits)
    }

    pub fn range_r(&self) -> u32 {
        self.range_r
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.n + j]
    }

    /// The normalized matrix `a / m` as represented, `R(i)` per entry.
    pub fn to_normalized(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| f64::from(self.get(i, j)) / ONE)
    }

    /// `m * R(i)` per entry.
    pub fn to_dense(&self) -> DenseMatrix {
        let m = self.scale_m();
        self.to_normalized().map(|x| x * m)
    }

    pub(super) fn into_data(self) -> Vec<i32> {
        self.data
    }
}

/// Normalize `a` into `[-2^-r, 2^-r]` and convert to fixed point with
/// round-to-nearest, clamping to `±(2^31 - 1)`.
///
/// The clamp only matters for `r ≤ 1`, where the largest entry maps to
/// `2^32` or `2^31`.
pub fn to_fixed(a: &DenseMatrix, r: u32) -> Result<FixedPointMatrix, QiluError> {
    if !a.is_square() {
        return Err(QiluError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(QiluError::NonFinite);
    }
    if r > 31 {
        return Err(QiluError::InvalidRange(r));
    }
    let max = a.max_abs();
    if max == 0.0 {
        return Err(QiluError::ZeroMatrix);
    }
    let m = max * 2f64.powi(r as i32);
    let limit = f64::from(i32::MAX);
    let data = a
        .data()
        .iter()
        .map(|&x| ((x / m) * ONE).round_ties_even().clamp(-limit, limit) as i32)
        .collect();
    Ok(FixedPointMatrix {
        n: a.rows(),
        data,
        scale_bits: m.to_bits(),
        range_r: r,
    })
}
