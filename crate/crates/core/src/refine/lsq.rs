use std::cell::RefCell;

use super::gmres::gmres_restarted;
use super::prepare::{matvec_in, matvec_t_in, Monitor, Verdict};
use super::{forward_error, pow2_scale, IrConfig, IrReport, RefineError, TriSolveFormat};
use crate::dense::{
    chol_emulated, gemm_emulated, norm2, norm_inf, tri_solve_emulated, tri_solve_transpose_emulated, DenseError,
    DenseMatrix, Side, CHOL_HALF_MAX_DOUBLINGS,
};
use crate::prec::{op_count, Arith, Format};

/// `‖Aᵀ(b − A x)‖_∞ / (‖Aᵀ‖_∞ (‖A‖_∞ ‖x‖_∞ + ‖b‖_∞))` in binary64.
pub fn lsq_backward_error(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    if x.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let ax = a.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let num = norm_inf(&a.matvec_t(&r));
    if num == 0.0 {
        return 0.0;
    }
    let den = a.norm_one() * (a.norm_inf() * norm_inf(x) + norm_inf(b));
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Least squares `min ‖b − A x‖₂` by GMRES-IR on the normal equations,
/// preconditioned with a shifted low-precision Cholesky factor of the
/// column-scaled Gram matrix.
///
/// With `S = diag(1/‖a_j‖₂)`, `mu = theta x_max` and
/// `B_h = round(sqrt(mu) A S)`, the Gram matrix `C = B_hᵀ B_h` is formed in
/// `fact_fmt` and `C + c u diag(c_ii) = RᵀR` is factorized there, doubling
/// `c` from `c0` on failure. Corrections solve `M AᵀA z = M r` with
/// `M = mu S R⁻¹ R⁻ᵀ S` by GMRES in `work_fmt`; `AᵀA y` is evaluated as
/// `Aᵀ(A y)` in `resid_fmt`.
pub fn lsq_gmres_ir(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &IrConfig,
    theta: f64,
    c0: u64,
) -> Result<(Vec<f64>, IrReport), RefineError> {
    cfg.validate()?;
    let (m, n) = a.shape();
    if m < n || n == 0 {
        return Err(RefineError::InvalidConfig(format!("need m >= n >= 1, got {m}x{n}")));
    }
    if b.len() != m {
        return Err(RefineError::InvalidConfig(format!(
            "right-hand side has length {}, expected {m}",
            b.len()
        )));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(RefineError::InvalidConfig(format!("theta must lie in (0, 1], got {theta}")));
    }
    let mut s = Vec::with_capacity(n);
    for j in 0..n {
        let c = norm2(&a.col(j));
        if c == 0.0 {
            return Err(RefineError::InvalidConfig(format!("column {j} is zero")));
        }
        s.push(1.0 / c);
    }

    let fact = cfg.fact_fmt;
    let ar_f = Arith::new(fact);
    let mu = theta * fact.x_max();
    let root_mu = mu.sqrt();
    let b_h = DenseMatrix::from_fn(m, n, |i, j| ar_f.round(root_mu * a[(i, j)] * s[j]));
    let gram = gemm_emulated(&b_h.transpose(), &b_h, &DenseMatrix::zeros(n, n), 1.0, 0.0, fact, fact)?;
    let (r_factor, shift_c) = shifted_cholesky(&gram, c0.max(1), fact)?;

    let tri_fmt = match cfg.tri_fmt {
        TriSolveFormat::Work => cfg.work_fmt,
        TriSolveFormat::Factor => fact,
    };
    let ar_w = Arith::new(cfg.work_fmt);
    let ar_r = Arith::new(cfg.resid_fmt);
    let a_r = a.rounded(&ar_r);
    let ms: Vec<f64> = s.iter().map(|sj| ar_w.round(mu * sj)).collect();
    let s_w = ar_w.round_slice(&s);
    let failure: RefCell<Option<DenseError>> = RefCell::new(None);

    let precond = |v: &[f64]| -> Vec<f64> {
        let t = pow2_scale(v);
        let w: Vec<f64> = v.iter().zip(&s_w).map(|(&x, &sj)| ar_w.mul(ar_w.round(x / t), sj)).collect();
        let y = tri_solve_transpose_emulated(&r_factor, &w, Side::Upper, false, tri_fmt)
            .and_then(|y| tri_solve_emulated(&r_factor, &y, Side::Upper, false, tri_fmt));
        match y {
            Ok(y) => y
                .iter()
                .zip(&ms)
                .map(|(&yi, &mj)| ar_w.mul(ar_w.round(yi), mj) * t)
                .collect(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![0.0; v.len()]
            }
        }
    };
    let normal_op = |y: &[f64]| matvec_t_in(&a_r, &matvec_in(&a_r, y, &ar_r), &ar_r);

    let tol = cfg.tol_for(n);
    let mut report = IrReport {
        tol,
        shift_c: Some(shift_c),
        mu: Some(mu),
        theta: Some(theta),
        forward_errors: cfg.reference.as_ref().map(|_| Vec::new()),
        ..IrReport::default()
    };

    let atb = matvec_t_in(&a_r, b, &ar_r);
    let mut x = cfg_x(cfg).round_slice(&precond(&atb));
    report.tri_solves += 2;

    let probe = vec![1.0; n];
    let before = op_count();
    precond(&normal_op(&probe));
    report.precond_ops_per_apply = Some(op_count() - before);

    let record = |report: &mut IrReport, x: &[f64]| {
        let berr = lsq_backward_error(a, x, b);
        report.backward_errors.push(berr);
        if let (Some(fe), Some(xt)) = (report.forward_errors.as_mut(), cfg.reference.as_ref()) {
            fe.push(forward_error(x, xt));
        }
        berr
    };
    let mut monitor = Monitor::new(record(&mut report, &x));
    let mut ar_x = cfg_x(cfg);
    let mut x_fmt = cfg.x_fmt;

    loop {
        if report.final_backward_error() <= tol {
            report.converged = true;
            break;
        }
        if report.iterations >= cfg.max_iters {
            break;
        }
        let res: Vec<f64> = {
            let ax = matvec_in(&a_r, &x, &ar_r);
            let d: Vec<f64> = b.iter().zip(&ax).map(|(&bi, &p)| ar_r.sub(ar_r.round(bi), p)).collect();
            matvec_t_in(&a_r, &d, &ar_r)
        };
        let out = gmres_restarted(
            &normal_op,
            &precond,
            &res,
            cfg.inner_tol(),
            cfg.inner_maxit(n),
            cfg.work_fmt,
            cfg.restart(),
        );
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e.into());
        }
        report.tri_solves += 2 * (out.iterations + 1);
        report.inner_iterations.push(out.iterations);
        report.basis_defects.push(out.basis_defect);
        for (xi, zi) in x.iter_mut().zip(&out.z) {
            *xi = ar_x.add(*xi, ar_x.round(*zi));
        }
        report.iterations += 1;
        let berr = record(&mut report, &x);
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
    Ok((x, report))
}

fn cfg_x(cfg: &IrConfig) -> Arith {
    Arith::new(cfg.x_fmt)
}

/// Cholesky of `C + c u diag(c_ii)` in `fmt`, doubling `c` until it works.
fn shifted_cholesky(gram: &DenseMatrix, c0: u64, fmt: Format) -> Result<(DenseMatrix, u64), RefineError> {
    let ar = Arith::new(fmt);
    let u = fmt.unit_roundoff();
    let mut c = c0;
    for _ in 0..=CHOL_HALF_MAX_DOUBLINGS {
        let mut g = gram.clone();
        for i in 0..g.rows() {
            let d = g[(i, i)];
            g[(i, i)] = ar.add(d, ar.round(c as f64 * u * d));
        }
        match chol_emulated(&g, fmt) {
            Ok(r) => return Ok((r, c)),
            Err(DenseError::NotPositiveDefinite { .. }) => c *= 2,
            Err(e) => return Err(e.into()),
        }
    }
    Err(RefineError::RankDeficient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::Inner;

    fn cfg() -> IrConfig {
        IrConfig::new(Format::FP16, Format::FP64, Format::FP64)
            .with_inner(Inner::gmres())
            .with_tol(1e-15)
    }

    #[test]
    fn one_dimensional_mean() {
        let a = DenseMatrix::from_rows(&[[1.0], [1.0]]);
        let (x, rep) = lsq_gmres_ir(&a, &[1.0, 3.0], &cfg(), 0.1, 2).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_columns() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let b = [2.0, -3.0, 0.0];
        let (x, rep) = lsq_gmres_ir(&a, &b, &cfg(), 0.1, 2).unwrap();
        assert!(rep.iterations <= 1, "{rep:?}");
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] + 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_shapes() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]);
        assert!(lsq_gmres_ir(&a, &[1.0], &cfg(), 0.1, 2).is_err());
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        assert!(lsq_gmres_ir(&a, &[1.0, 1.0], &cfg(), 0.1, 2).is_err());
    }
}
