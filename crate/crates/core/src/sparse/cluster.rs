use super::kmeans::{kmeans1d, nearest, MAX_CLUSTERS};
use super::{CsrMatrix, SparseError};
use crate::prec::{Arith, Format, Rng};

/// Residual formats tried per cluster, coarsest first.
pub const RESIDUAL_LADDER: [Format; 3] = [Format::FP16, Format::FP32, Format::FP64];

/// Lloyd iterations used by [`compress_clustered`].
const KMEANS_ITERS: usize = 100;

/// CSR matrix whose values are stored as an 8-bit cluster id plus a residual
/// relative to the cluster center, rounded to a per-cluster format.
#[derive(Debug, Clone)]
pub struct ClusteredCsr {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    pub centers: Vec<f64>,
    pub ids: Vec<u8>,
    pub residual_fmt: Vec<Format>,
    pub residuals: Vec<f64>,
}

impl ClusteredCsr {
    pub fn nnz(&self) -> usize {
        self.ids.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// `center[id] + residual` for nonzero `k`.
    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        self.centers[self.ids[k] as usize] + self.residuals[k]
    }

    pub fn reconstructed_values(&self) -> Vec<f64> {
        (0..self.nnz()).map(|k| self.value(k)).collect()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::new(
            self.n_rows,
            self.n_cols,
            self.row_offsets.clone(),
            self.col_indices.clone(),
            self.reconstructed_values(),
        )
        .expect("structure copied from a valid matrix")
    }

    /// Format of the residual stored for nonzero `k`.
    pub fn format_of(&self, k: usize) -> Format {
        self.residual_fmt[self.ids[k] as usize]
    }
}

/// Cluster the values of `a` into at most `k` groups and store each value as
/// a cluster id plus a rounded residual.
///
/// For each cluster the coarsest format of [`RESIDUAL_LADDER`] is chosen such
/// that every member `v` is reconstructed within
/// `tau * max(|v|, tau * max|values|)`.
pub fn compress_clustered(a: &CsrMatrix, k: usize, tau: f64, rng: &mut Rng) -> Result<ClusteredCsr, SparseError> {
    compress_clustered_with(a, k, tau, rng, None)
}

/// [`compress_clustered`] with an optional residual format imposed on every
/// cluster instead of the tolerance-driven choice.
pub fn compress_clustered_with(
    a: &CsrMatrix,
    k: usize,
    tau: f64,
    rng: &mut Rng,
    forced: Option<Format>,
) -> Result<ClusteredCsr, SparseError> {
    if k == 0 || k > MAX_CLUSTERS {
        return Err(SparseError::InvalidParameter(format!("k must lie in 1..={MAX_CLUSTERS}, got {k}")));
    }
    if !(tau >= 0.0) {
        return Err(SparseError::InvalidParameter(format!("tau must be non-negative, got {tau}")));
    }
    let values = a.values();
    let mut centers = if values.is_empty() {
        Vec::new()
    } else {
        kmeans1d(values, k, KMEANS_ITERS, rng)?
    };
    let ids: Vec<u8> = values.iter().map(|&v| nearest(&centers, v) as u8).collect();

    let v_floor = tau * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for (idx, &c) in ids.iter().enumerate() {
        members[c as usize].push(idx);
    }

    let mut residual_fmt = Vec::with_capacity(centers.len());
    let mut residuals = vec![0.0; values.len()];
    for (c, group) in members.iter().enumerate() {
        let fmt = match forced {
            Some(f) => f,
            None => choose_format(values, group, centers[c], tau, v_floor),
        };
        if !exact_in_binary64(values, group, centers[c]) && fmt.is_binary64() {
            // v - c is not exact in binary64 for some member; a zero center
            // makes the stored residual the value itself.
            centers[c] = 0.0;
        }
        let ar = Arith::new(fmt);
        for &idx in group {
            residuals[idx] = ar.round(values[idx] - centers[c]);
        }
        residual_fmt.push(fmt);
    }

    Ok(ClusteredCsr {
        n_rows: a.n_rows(),
        n_cols: a.n_cols(),
        row_offsets: a.row_offsets().to_vec(),
        col_indices: a.col_indices().to_vec(),
        centers,
        ids,
        residual_fmt,
        residuals,
    })
}

fn choose_format(values: &[f64], group: &[usize], center: f64, tau: f64, v_floor: f64) -> Format {
    for fmt in RESIDUAL_LADDER {
        let ar = Arith::new(fmt);
        let ok = group.iter().all(|&idx| {
            let v = values[idx];
            let err = ((center + ar.round(v - center)) - v).abs();
            err <= tau * v.abs().max(v_floor)
        });
        if ok {
            return fmt;
        }
    }
    Format::FP64
}

fn exact_in_binary64(values: &[f64], group: &[usize], center: f64) -> bool {
    group.iter().all(|&idx| center + (values[idx] - center) == values[idx])
}

/// `y = Â x` in binary64 over reconstructed values, accumulated left to
/// right within each row.
pub fn spmv_clustered(m: &ClusteredCsr, x: &[f64]) -> Result<Vec<f64>, SparseError> {
    if x.len() != m.n_cols {
        return Err(SparseError::DimensionMismatch {
            expected: m.n_cols,
            found: x.len(),
        });
    }
    Ok((0..m.n_rows)
        .map(|i| {
            (m.row_offsets[i]..m.row_offsets[i + 1]).fold(0.0, |s, k| s + m.value(k) * x[m.col_indices[k]])
        })
        .collect())
}

/// Storage cost: 8 bits per id, the residual format's width per residual and
/// 64 bits per center. Returns (mean bits per nonzero, total bits).
pub fn footprint_bits(m: &ClusteredCsr) -> (f64, u64) {
    let residual_bits: u64 = (0..m.nnz()).map(|k| u64::from(m.format_of(k).bits())).sum();
    let total = 8 * m.nnz() as u64 + residual_bits + 64 * m.centers.len() as u64;
    let per = if m.nnz() == 0 { 0.0 } else { total as f64 / m.nnz() as f64 };
    (per, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_compresses_to_one_center() {
        let a = CsrMatrix::identity(10);
        let m = compress_clustered(&a, 1, 1e-3, &mut Rng::new(0)).unwrap();
        assert_eq!(m.centers, vec![1.0]);
        assert!(m.residuals.iter().all(|&r| r == 0.0));
        assert_eq!(m.residual_fmt, vec![Format::FP16]);
        assert_eq!(spmv_clustered(&m, &[2.5; 10]).unwrap(), vec![2.5; 10]);
    }

    #[test]
    fn tau_zero_is_lossless() {
        let mut rng = Rng::new(4);
        let trip: Vec<_> = (0..200).map(|k| (k % 20, (k * 7) % 20, rng.normal() * 10f64.powi((k % 7) as i32 - 3))).collect();
        let a = CsrMatrix::from_triplets(20, 20, &trip).unwrap();
        let m = compress_clustered(&a, 16, 0.0, &mut Rng::new(1)).unwrap();
        assert_eq!(m.reconstructed_values(), a.values());
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let y = spmv_clustered(&m, &x).unwrap();
        assert_eq!(y, super::super::spmv(&a, &x, Format::FP64).unwrap());
    }

    #[test]
    fn footprint_accounting() {
        let a = CsrMatrix::identity(4);
        let m = compress_clustered_with(&a, 1, 0.1, &mut Rng::new(0), Some(Format::FP64)).unwrap();
        assert_eq!(footprint_bits(&m), ((4.0 * 72.0 + 64.0) / 4.0, 4 * 72 + 64));
        let m = compress_clustered_with(&a, 1, 0.1, &mut Rng::new(0), Some(Format::FP16)).unwrap();
        assert_eq!(footprint_bits(&m).1, 4 * 24 + 64);
    }

    #[test]
    fn parameters_checked() {
        let a = CsrMatrix::identity(2);
        assert!(compress_clustered(&a, 0, 0.1, &mut Rng::new(0)).is_err());
        assert!(compress_clustered(&a, 300, 0.1, &mut Rng::new(0)).is_err());
        assert!(compress_clustered(&a, 2, -1.0, &mut Rng::new(0)).is_err());
    }
}
