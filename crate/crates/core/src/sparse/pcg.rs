use super::block_jacobi::{block_jacobi_apply, BlockJacobiPrecond};
use super::{CsrMatrix, SparseError};
use crate::dense::{dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct PcgOutput {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖r_k‖₂ / ‖b‖₂` of the recursively updated residual; entry 0 is 1.
    pub res_history: Vec<f64>,
}

/// Preconditioned conjugate gradients in binary64, starting from `x = 0`.
///
/// Stops once the recursively updated residual satisfies
/// `‖r‖₂ ≤ tol ‖b‖₂`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    precond: Option<&BlockJacobiPrecond>,
    tol: f64,
    maxit: usize,
) -> Result<PcgOutput, SparseError> {
    let n = a.n_rows();
    if a.n_cols() != n || b.len() != n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if let Some(p) = precond {
        if p.n() != n {
            return Err(SparseError::DimensionMismatch { expected: n, found: p.n() });
        }
    }
    let apply = |r: &[f64]| match precond {
        Some(p) => block_jacobi_apply(p, r),
        None => r.to_vec(),
    };

    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let mut out = PcgOutput {
        x: Vec::new(),
        iterations: 0,
        res_history: vec![1.0],
    };
    if bnorm == 0.0 {
        out.x = x;
        return Ok(out);
    }
    let mut r = b.to_vec();
    let mut z = apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    while out.iterations < maxit {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SparseError::IndefiniteDetected {
                iteration: out.iterations,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        out.iterations += 1;
        let rel = norm2(&r) / bnorm;
        out.res_history.push(rel);
        if rel <= tol {
            out.x = x;
            return Ok(out);
        }
        z = apply(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    out.x = x;
    Err(SparseError::NotConverged {
        iterations: out.iterations,
        partial: Box::new(out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_one_step() {
        let out = pcg(&CsrMatrix::identity(5), &[1.0, 2.0, 3.0, 4.0, 5.0], None, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn diagonal_terminates_by_distinct_eigenvalues() {
        let d = [1.0, 2.0, 2.0, 5.0, 5.0, 5.0];
        let trip: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        let a = CsrMatrix::from_triplets(6, 6, &trip).unwrap();
        let out = pcg(&a, &[1.0; 6], None, 1e-12, 50).unwrap();
        assert!(out.iterations <= 3 + 2, "{out:?}");
    }

    #[test]
    fn indefinite_detected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(
            pcg(&a, &[0.0, 1.0], None, 1e-12, 10),
            Err(SparseError::IndefiniteDetected { .. })
        ));
    }

    #[test]
    fn cap_reported() {
        let trip: Vec<_> = (0..20).map(|i| (i, i, 1.0 + i as f64)).collect();
        let a = CsrMatrix::from_triplets(20, 20, &trip).unwrap();
        match pcg(&a, &[1.0; 20], None, 1e-14, 3) {
            Err(SparseError::NotConverged { iterations, partial }) => {
                assert_eq!(iterations, 3);
                assert_eq!(partial.res_history.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }
}
