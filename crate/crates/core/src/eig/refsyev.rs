use super::{check_symmetric, pair_residuals, EigError, EigenPairs};
use crate::dense::DenseMatrix;

/// Norm used for `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaNorm {
    #[default]
    Frobenius,
    /// Power-iteration estimate of the 2-norm.
    Spectral,
}

/// Quantities of one refinement step.
#[derive(Debug, Clone)]
pub struct RefineStep {
    /// Refinement matrix `Ẽ`, ℓ×ℓ.
    pub e: DenseMatrix,
    pub omega: f64,
    /// `‖A x − λ x‖₂ / (‖A‖₂ ‖x‖₂)` for each refined pair.
    pub residuals: Vec<f64>,
    /// Pairs `(i, j)` whose gap was at most `ω`, handled by `e_ij = r_ij / 2`.
    pub clustered: usize,
    /// Only part of the spectrum was refined, so the attainable accuracy
    /// may be limited by the missing directions.
    pub partial_spectrum: bool,
}

/// One binary64 refinement step of all columns of `pairs.x`.
pub fn refine_syev(a: &DenseMatrix, pairs: &EigenPairs) -> Result<(EigenPairs, RefineStep), EigError> {
    refine_syev_with(a, pairs, OmegaNorm::Frobenius)
}

pub fn refine_syev_with(
    a: &DenseMatrix,
    pairs: &EigenPairs,
    norm: OmegaNorm,
) -> Result<(EigenPairs, RefineStep), EigError> {
    check_symmetric(a)?;
    let x = &pairs.x;
    let l = x.cols();
    if x.rows() != a.rows() || l == 0 || l > a.rows() {
        return Err(EigError::DimensionMismatch {
            expected: a.rows(),
            found: x.rows(),
        });
    }
    let ax = a.matmul(x);
    let s = x.t_matmul(&ax);
    let mut r = x.t_matmul(x).map(|v| -v);
    for i in 0..l {
        r[(i, i)] += 1.0;
    }
    let lambda: Vec<f64> = (0..l).map(|i| s[(i, i)] / (1.0 - r[(i, i)])).collect();

    let mut s_minus_d = s.clone();
    for (i, li) in lambda.iter().enumerate() {
        s_minus_d[(i, i)] -= li;
    }
    let nrm = |m: &DenseMatrix| match norm {
        OmegaNorm::Frobenius => m.norm_fro(),
        OmegaNorm::Spectral => m.norm2_estimate(),
    };
    let omega = 2.0 * (nrm(&s_minus_d) + nrm(a) * nrm(&r));

    let mut clustered = 0;
    let e = DenseMatrix::from_fn(l, l, |i, j| {
        let gap = lambda[j] - lambda[i];
        if gap.abs() > omega {
            (s[(i, j)] + lambda[j] * r[(i, j)]) / gap
        } else {
            if i != j {
                clustered += 1;
            }
            r[(i, j)] / 2.0
        }
    });
    let x_next = x.add(&x.matmul(&e));
    let next = EigenPairs {
        x: x_next,
        lambda,
        fmt: crate::prec::Format::FP64,
    };
    let residuals = pair_residuals(a, &next);
    let step = RefineStep {
        e,
        omega,
        residuals,
        clustered,
        partial_spectrum: l < a.rows(),
    };
    Ok((next, step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::jacobi_eig;
    use crate::prec::{Format, Rng};

    #[test]
    fn diagonal_fixed_point() {
        let a = DenseMatrix::from_diag(&[1.0, 4.0, 9.0]);
        let pairs = EigenPairs {
            x: DenseMatrix::identity(3),
            lambda: vec![1.0, 4.0, 9.0],
            fmt: Format::FP64,
        };
        let (next, step) = refine_syev(&a, &pairs).unwrap();
        assert_eq!(step.e, DenseMatrix::zeros(3, 3));
        assert_eq!(next.x, DenseMatrix::identity(3));
        assert_eq!(next.lambda, vec![1.0, 4.0, 9.0]);
        assert_eq!(step.omega, 0.0);
    }

    #[test]
    fn single_to_double() {
        let mut rng = Rng::new(11);
        let a = DenseMatrix::from_fn(60, 60, |_, _| rng.normal()).symmetrized();
        let mut pairs = jacobi_eig(&a, Format::FP32, 1e-7).unwrap();
        let mut worst = Vec::new();
        for _ in 0..4 {
            let (next, step) = refine_syev(&a, &pairs).unwrap();
            worst.push(step.residuals.iter().cloned().fold(0.0, f64::max));
            pairs = next;
        }
        assert!(*worst.last().unwrap() < 1e-13, "{worst:?}");
    }

    #[test]
    fn cluster_takes_half_branch() {
        // Eigenvalues 1 and 1 + 1e-10 are closer than ω for single-precision input.
        let mut rng = Rng::new(2);
        let n = 8;
        let q = jacobi_eig(&DenseMatrix::from_fn(n, n, |_, _| rng.normal()).symmetrized(), Format::FP64, 1e-15)
            .unwrap()
            .x;
        let mut d = DenseMatrix::from_diag(&[1.0, 1.0 + 1e-10, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        d = q.matmul(&d).matmul(&q.transpose()).symmetrized();
        let mut pairs = jacobi_eig(&d, Format::FP32, 1e-7).unwrap();
        let mut prev = f64::INFINITY;
        let mut took_branch = false;
        for _ in 0..3 {
            let (next, step) = refine_syev(&d, &pairs).unwrap();
            took_branch |= step.clustered > 0;
            let worst = step.residuals.iter().cloned().fold(0.0, f64::max);
            assert!(worst <= prev.max(1e-14), "{worst:e} after {prev:e}");
            prev = worst;
            pairs = next;
        }
        assert!(took_branch);
        // Within the cluster the pairs are only resolved to about the gap.
        assert!(prev < 1e-10, "{prev:e}");
    }
}
