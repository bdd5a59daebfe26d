//! Test-matrix generators. Every generator is a pure function of its
//! parameters and the seed of the supplied [`Rng`].

use std::fmt;
use std::str::FromStr;

use mplab_core::dense::DenseMatrix;
use mplab_core::sparse::CsrMatrix;
use mplab_core::Rng;

use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Dense i.i.d. entries in (−1, 1).
    Uniform,
    /// `U Σ Vᵀ` with Haar-random orthogonal factors and geometrically spaced
    /// singular values, `κ₂ = kappa`.
    Randsvd,
    /// 5-point Laplacian on a `g × g` grid (`n = g²`).
    Laplacian2d,
    /// `MᵀM + n I` with `M` uniform in (−1, 1).
    SpdShifted,
    /// Sparse matrix whose nonzeros come from two narrow lobes around 1.25
    /// and 1.75.
    TwoLobe,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Uniform,
        Family::Randsvd,
        Family::Laplacian2d,
        Family::SpdShifted,
        Family::TwoLobe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Randsvd => "randsvd",
            Family::Laplacian2d => "laplacian2d",
            Family::SpdShifted => "spd-shifted",
            Family::TwoLobe => "twolobe",
        }
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, Family::Laplacian2d | Family::TwoLobe)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Family, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown matrix family `{s}`"))
    }
}

/// Description of a generated matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGenerator {
    pub family: Family,
    /// Columns, or grid side for `laplacian2d`.
    pub n: usize,
    /// Rows for rectangular families; defaults to `n`.
    pub m: Option<usize>,
    pub kappa: f64,
    /// Fraction of nonzeros for sparse random families.
    pub density: f64,
}

impl MatrixGenerator {
    pub fn new(family: Family, n: usize) -> MatrixGenerator {
        MatrixGenerator {
            family,
            n,
            m: None,
            kappa: 1e2,
            density: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        if !(self.kappa >= 1.0) {
            return Err(format!("kappa must be at least 1, got {}", self.kappa));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(format!("density must lie in (0, 1], got {}", self.density));
        }
        if self.m.is_some_and(|m| m < self.n) && self.family == Family::Randsvd {
            return Err("randsvd needs m >= n".into());
        }
        Ok(())
    }
}

pub fn generate(gen: &MatrixGenerator, rng: &mut Rng) -> Matrix {
    let m = gen.m.unwrap_or(gen.n);
    match gen.family {
        Family::Uniform => Matrix::Dense(uniform(m, gen.n, rng)),
        Family::Randsvd => Matrix::Dense(randsvd(m, gen.n, gen.kappa, rng)),
        Family::Laplacian2d => Matrix::Sparse(laplacian2d(gen.n)),
        Family::SpdShifted => Matrix::Dense(spd_shifted(gen.n, rng)),
        Family::TwoLobe => Matrix::Sparse(two_lobe(m, gen.n, gen.density, rng)),
    }
}

pub fn uniform(m: usize, n: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.uniform_open(-1.0, 1.0))
}

pub fn gaussian(m: usize, n: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.normal())
}

/// Orthonormal `m × n` factor (`m ≥ n`) from a Householder QR of a Gaussian
/// matrix, with column signs fixed so the distribution is Haar.
pub fn random_orthonormal(m: usize, n: usize, rng: &mut Rng) -> DenseMatrix {
    let g = gaussian(m, n, rng);
    let (q, r_diag) = householder_q(&g);
    DenseMatrix::from_fn(m, n, |i, j| q[(i, j)] * r_diag[j].signum())
}

/// Thin `Q` of `A = Q R` and the diagonal of `R`.
fn householder_q(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        let x: Vec<f64> = (k..m).map(|i| w[(i, k)]).collect();
        let alpha = -x[0].signum() * mplab_core::dense::norm2(&x);
        let mut v = x;
        v[0] -= alpha;
        let vn = mplab_core::dense::norm2(&v);
        if vn > 0.0 {
            v.iter_mut().for_each(|t| *t /= vn);
        }
        for j in k..n {
            let d: f64 = (k..m).map(|i| v[i - k] * w[(i, j)]).sum();
            for i in k..m {
                w[(i, j)] -= 2.0 * v[i - k] * d;
            }
        }
        diag.push(w[(k, k)]);
        vs.push(v);
    }
    let mut q = DenseMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for k in (0..n).rev() {
        let v = &vs[k];
        for j in 0..n {
            let d: f64 = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
            for i in k..m {
                q[(i, j)] -= 2.0 * v[i - k] * d;
            }
        }
    }
    (q, diag)
}

/// Singular values `kappa^(-i/(n-1))`, `i = 0..n`.
pub fn geometric_singular_values(n: usize, kappa: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|i| kappa.powf(-(i as f64) / (n - 1) as f64)).collect()
}

pub fn randsvd(m: usize, n: usize, kappa: f64, rng: &mut Rng) -> DenseMatrix {
    let u = random_orthonormal(m, n, rng);
    let v = random_orthonormal(n, n, rng);
    let sigma = geometric_singular_values(n, kappa);
    let us = DenseMatrix::from_fn(m, n, |i, j| u[(i, j)] * sigma[j]);
    us.matmul(&v.transpose())
}

pub fn spd_shifted(n: usize, rng: &mut Rng) -> DenseMatrix {
    let m = uniform(n, n, rng);
    let mut a = m.t_matmul(&m);
    for i in 0..n {
        a[(i, i)] += n as f64;
    }
    a.symmetrized()
}

/// 5-point Laplacian on a `g × g` grid with Dirichlet boundary.
pub fn laplacian2d(g: usize) -> CsrMatrix {
    let n = g * g;
    let mut trip = Vec::with_capacity(5 * n);
    for i in 0..g {
        for j in 0..g {
            let row = i * g + j;
            if i > 0 {
                trip.push((row, row - g, -1.0));
            }
            if j > 0 {
                trip.push((row, row - 1, -1.0));
            }
            trip.push((row, row, 4.0));
            if j + 1 < g {
                trip.push((row, row + 1, -1.0));
            }
            if i + 1 < g {
                trip.push((row, row + g, -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trip).expect("stencil indices are in range")
}

/// Random sparsity pattern with values drawn with equal probability from
/// `N(1.25, σ²)` or `N(1.75, σ²)`, `σ = 10⁻³`.
pub const TWO_LOBE_SIGMA: f64 = 1e-3;

pub fn two_lobe(m: usize, n: usize, density: f64, rng: &mut Rng) -> CsrMatrix {
    let per_row = ((n as f64 * density).round() as usize).clamp(1, n);
    let mut trip = Vec::with_capacity(m * per_row);
    for i in 0..m {
        let mut cols: Vec<usize> = (0..per_row).map(|_| rng.index(n)).collect();
        cols.sort_unstable();
        cols.dedup();
        for j in cols {
            let center = if rng.uniform() < 0.5 { 1.25 } else { 1.75 };
            trip.push((i, j, center + TWO_LOBE_SIGMA * rng.normal()));
        }
    }
    CsrMatrix::from_triplets(m, n, &trip).expect("indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_reproducible_and_in_range() {
        let a = uniform(4, 4, &mut Rng::new(3));
        let b = uniform(4, 4, &mut Rng::new(3));
        assert_eq!(a, b);
        assert!(a.max_abs() < 1.0);
    }

    #[test]
    fn orthonormal_factor() {
        let q = random_orthonormal(30, 10, &mut Rng::new(1));
        let g = q.t_matmul(&q);
        let defect = g.sub(&DenseMatrix::identity(10)).max_abs();
        assert!(defect < 1e-14, "{defect}");
    }

    #[test]
    fn laplacian_structure() {
        let l = laplacian2d(4);
        assert_eq!((l.n_rows(), l.n_cols()), (16, 16));
        let d = l.to_dense();
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let row = i * 4 + j;
            assert_eq!(d.row(row).iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("banana".parse::<Family>().is_err());
    }
}
