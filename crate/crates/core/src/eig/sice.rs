use super::{check_symmetric, EigError};
use crate::dense::{lu_emulated, DenseError, DenseMatrix};
use crate::prec::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct SiceResult {
    /// Eigenvector scaled so that its largest initial component is 1.
    pub x: Vec<f64>,
    pub lambda: f64,
    pub iters: usize,
    /// Index `s` of the pinned component.
    pub s: usize,
    /// The stopping rule fired before `max_iters`.
    pub converged: bool,
    /// `|y_i[s]|` per iteration, the eigenvalue corrections.
    pub corrections: Vec<f64>,
}

/// Refine a single eigenpair by repeatedly solving the system obtained from
/// `A − λI` with column `s` replaced by `−x`.
///
/// The right-hand side is the residual `λx − Ax`; the correction `y` then
/// updates `λ += y[s]` and `x += y` with `x[s]` kept at 1. Iteration stops
/// once a correction fails to halve, `|2 y_i[s]| > |y_{i−1}[s]|`, or after
/// `max_iters` solves.
pub fn sice_refine(a: &DenseMatrix, x0: &[f64], lambda0: f64, max_iters: usize) -> Result<SiceResult, EigError> {
    check_symmetric(a)?;
    let n = a.rows();
    if x0.len() != n {
        return Err(EigError::DimensionMismatch { expected: n, found: x0.len() });
    }
    let (s, m) = x0
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v.abs() > bv.abs() { (i, v) } else { (bi, bv) });
    if m == 0.0 || !m.is_finite() || !lambda0.is_finite() {
        return Err(EigError::InvalidInput("x0 must be finite and nonzero".into()));
    }
    let mut x: Vec<f64> = x0.iter().map(|v| v / m).collect();
    x[s] = 1.0;
    let mut lambda = lambda0;
    let mut out = SiceResult {
        x: Vec::new(),
        lambda,
        iters: 0,
        s,
        converged: false,
        corrections: Vec::new(),
    };

    let mut prev: Option<f64> = None;
    while out.iters < max_iters {
        let ax = a.matvec(&x);
        let r: Vec<f64> = (0..n).map(|i| lambda * x[i] - ax[i]).collect();
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] -= lambda;
        }
        let neg_x: Vec<f64> = x.iter().map(|v| -v).collect();
        b.set_col(s, &neg_x);
        let iteration = out.iters + 1;
        let lu = lu_emulated(&b, Format::FP64).map_err(|e| match e {
            DenseError::ExactZeroPivot { .. } => EigError::SingularB { iteration },
            other => EigError::Dense(other),
        })?;
        let y = lu.solve(&r, Format::FP64)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(EigError::SingularB { iteration });
        }
        out.iters = iteration;
        lambda += y[s];
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi += yi;
        }
        x[s] = 1.0;
        let ys = y[s].abs();
        out.corrections.push(ys);
        if ys == 0.0 || prev.is_some_and(|p| 2.0 * ys > p) {
            out.converged = true;
            break;
        }
        prev = Some(ys);
    }
    out.x = x;
    out.lambda = lambda;
    Ok(out)
}
