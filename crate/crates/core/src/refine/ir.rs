use super::prepare::{residual, Monitor, Prepared, Verdict};
use super::{backward_error, forward_error, Inner, IrConfig, IrReport, RefineError};
use crate::dense::{require_square, DenseMatrix};
use crate::prec::Arith;

/// Iterative refinement with up to three precisions.
///
/// The matrix is factorized in `fact_fmt` (after scaling when the format is
/// narrow), residuals are computed in `resid_fmt`, corrections are solved
/// with the factors in `fact_fmt` and added to the iterate in `x_fmt`.
pub fn ir_solve(a: &DenseMatrix, b: &[f64], cfg: &IrConfig) -> Result<(Vec<f64>, IrReport), RefineError> {
    cfg.validate()?;
    if cfg.inner != Inner::None {
        return Err(RefineError::InvalidConfig(
            "ir_solve uses direct corrections; use gmres_ir_solve for a GMRES inner solver".into(),
        ));
    }
    let n = require_square(a)?;
    check_rhs(n, b)?;
    let tol = cfg.tol_for(n);
    let prep = Prepared::new(a, cfg)?;

    let ar_r = Arith::new(cfg.resid_fmt);
    let a_r = a.rounded(&ar_r);
    let mut x_fmt = cfg.x_fmt;
    let mut ar_x = Arith::new(x_fmt);

    let mut report = IrReport {
        tol,
        mu: prep.scaled.then_some(prep.mu),
        theta: prep.scaled.then_some(prep.theta),
        forward_errors: cfg.reference.as_ref().map(|_| Vec::new()),
        ..IrReport::default()
    };
    let mut x = ar_x.round_slice(&prep.solve(b, cfg.fact_fmt)?);
    report.tri_solves += 2;
    let mut monitor = record(&mut report, a, &x, b, cfg);

    loop {
        if report.final_backward_error() <= tol {
            report.converged = true;
            return Ok((x, report));
        }
        if report.iterations >= cfg.max_iters {
            return Ok((x, report));
        }
        let r = residual(&a_r, b, &x, &ar_r);
        let z = prep.solve(&r, cfg.fact_fmt)?;
        report.tri_solves += 2;
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = ar_x.add(*xi, ar_x.round(*zi));
        }
        report.iterations += 1;
        let berr = push(&mut report, a, &x, b, cfg);
        match monitor.observe(berr) {
            Verdict::Continue => {}
            Verdict::Diverged => return Err(RefineError::Diverged(Box::new(report))),
            Verdict::Stagnating => {
                if cfg.escalate && berr > tol {
                    if let Some(next) = x_fmt.promoted() {
                        x_fmt = next;
                        ar_x = Arith::new(x_fmt);
                        report.escalations.push((report.iterations, x_fmt));
                    }
                }
            }
        }
    }
}

pub(super) fn check_rhs(n: usize, b: &[f64]) -> Result<(), RefineError> {
    if b.len() != n {
        return Err(RefineError::InvalidConfig(format!(
            "right-hand side has length {}, expected {n}",
            b.len()
        )));
    }
    Ok(())
}

/// Record the initial iterate and start the divergence monitor.
pub(super) fn record(report: &mut IrReport, a: &DenseMatrix, x: &[f64], b: &[f64], cfg: &IrConfig) -> Monitor {
    let berr = push(report, a, x, b, cfg);
    Monitor::new(berr)
}

pub(super) fn push(report: &mut IrReport, a: &DenseMatrix, x: &[f64], b: &[f64], cfg: &IrConfig) -> f64 {
    let berr = backward_error(a, x, b);
    report.backward_errors.push(berr);
    if let (Some(fe), Some(xt)) = (report.forward_errors.as_mut(), cfg.reference.as_ref()) {
        fe.push(forward_error(x, xt));
    }
    berr
}
