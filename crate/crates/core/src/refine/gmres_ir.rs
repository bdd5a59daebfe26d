use std::cell::{Cell, RefCell};

use super::gmres::gmres_restarted;
use super::ir::{check_rhs, push, record};
use super::prepare::{matvec_in, residual, Prepared, Verdict};
use super::{Inner, IrConfig, IrReport, RefineError, TriSolveFormat};
use crate::dense::{require_square, DenseMatrix};
use crate::prec::Arith;

/// GMRES-based iterative refinement.
///
/// Corrections solve `U⁻¹L⁻¹P Ã y = U⁻¹L⁻¹P R r` by GMRES in `work_fmt`,
/// where `Ã = R A S` is the (optionally) scaled matrix whose rounded copy
/// was factorized. The preconditioned operator is applied as a product with
/// `Ã` followed by two substitutions; the factors are never inverted.
pub fn gmres_ir_solve(a: &DenseMatrix, b: &[f64], cfg: &IrConfig) -> Result<(Vec<f64>, IrReport), RefineError> {
    cfg.validate()?;
    if cfg.inner == Inner::None {
        return Err(RefineError::InvalidConfig("gmres_ir_solve needs Inner::Gmres".into()));
    }
    let n = require_square(a)?;
    check_rhs(n, b)?;
    let tol = cfg.tol_for(n);
    let prep = Prepared::new(a, cfg)?;

    let ar_r = Arith::new(cfg.resid_fmt);
    let a_r = a.rounded(&ar_r);
    let ar_w = Arith::new(cfg.work_fmt);
    let a_scaled = prep.scaled_matrix(a).rounded(&ar_w);
    let tri_fmt = match cfg.tri_fmt {
        TriSolveFormat::Work => cfg.work_fmt,
        TriSolveFormat::Factor => cfg.fact_fmt,
    };
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

    let solves = Cell::new(0usize);
    let failure: RefCell<Option<RefineError>> = RefCell::new(None);
    let apply = |y: &[f64]| matvec_in(&a_scaled, y, &ar_w);
    let precond = |v: &[f64]| {
        solves.set(solves.get() + 2);
        match prep.precond(v, tri_fmt) {
            Ok(y) => y,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![0.0; v.len()]
            }
        }
    };

    loop {
        if report.final_backward_error() <= tol {
            report.converged = true;
            break;
        }
        if report.iterations >= cfg.max_iters {
            break;
        }
        let r = residual(&a_r, b, &x, &ar_r);
        let rhs: Vec<f64> = r.iter().zip(&prep.r_scale).map(|(ri, si)| ri * si).collect();
        let out = gmres_restarted(
            &apply,
            &precond,
            &rhs,
            cfg.inner_tol(),
            cfg.inner_maxit(n),
            cfg.work_fmt,
            cfg.restart(),
        );
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        report.inner_iterations.push(out.iterations);
        report.basis_defects.push(out.basis_defect);
        for ((xi, yi), si) in x.iter_mut().zip(&out.z).zip(&prep.s_scale) {
            *xi = ar_x.add(*xi, ar_x.round(yi * si));
        }
        report.iterations += 1;
        let berr = push(&mut report, a, &x, b, cfg);
        match monitor.observe(berr) {
            Verdict::Continue => {}
            Verdict::Diverged => {
                report.tri_solves += solves.get();
                return Err(RefineError::Diverged(Box::new(report)));
            }
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
    report.tri_solves += solves.get();
    Ok((x, report))
}
