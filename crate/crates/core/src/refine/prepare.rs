use super::{pow2_scale, IrConfig, RefineError};
use crate::dense::{equilibrate, lu_emulated, scale_round, DenseError, DenseMatrix, LuFactors};
use crate::prec::{Arith, Format};

/// LU factors of `mu * R A S` in the factorization format, where
/// `R = S = I` and `mu = 1` when no scaling was applied.
pub(crate) struct Prepared {
    pub lu: LuFactors,
    pub r_scale: Vec<f64>,
    pub s_scale: Vec<f64>,
    pub mu: f64,
    /// Headroom parameter the factors were computed with.
    pub theta: f64,
    pub scaled: bool,
}

/// Times `theta` is halved after the scaled factorization overflows.
pub(crate) const THETA_HALVINGS: u32 = 8;

impl Prepared {
    pub fn new(a: &DenseMatrix, cfg: &IrConfig) -> Result<Prepared, RefineError> {
        let n = a.rows();
        if cfg.wants_scaling() {
            let (r, s) = equilibrate(a)?;
            // Element growth during elimination can exceed the headroom left
            // by theta; shrink it and factorize again.
            let mut theta = cfg.theta;
            let mut halvings = 0;
            loop {
                let sh = scale_round(a, &r, &s, theta, cfg.fact_fmt)?;
                match lu_emulated(&sh.a_h, cfg.fact_fmt) {
                    Ok(lu) => {
                        return Ok(Prepared {
                            lu,
                            r_scale: sh.r_scale,
                            s_scale: sh.s_scale,
                            mu: sh.mu,
                            theta,
                            scaled: true,
                        })
                    }
                    Err(DenseError::OverflowInFactor { .. }) if halvings < THETA_HALVINGS => {
                        theta /= 2.0;
                        halvings += 1;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        } else {
            let lu = lu_emulated(a, cfg.fact_fmt)?;
            Ok(Prepared {
                lu,
                r_scale: vec![1.0; n],
                s_scale: vec![1.0; n],
                mu: 1.0,
                theta: cfg.theta,
                scaled: false,
            })
        }
    }

    /// Approximate `A^-1 v` with the stored factors, substitutions in `fmt`.
    ///
    /// The right-hand side is normalized by a power of two before it is
    /// rounded so that small residuals do not underflow in narrow formats.
    pub fn solve(&self, v: &[f64], fmt: Format) -> Result<Vec<f64>, RefineError> {
        let w: Vec<f64> = v.iter().zip(&self.r_scale).map(|(x, r)| r * x).collect();
        let t = pow2_scale(&w);
        let w: Vec<f64> = w.iter().map(|x| x / t).collect();
        let y = self.lu.solve(&w, fmt)?;
        let k = self.mu * t;
        Ok(y.iter().zip(&self.s_scale).map(|(yi, si)| si * yi * k).collect())
    }
}

impl Prepared {
    /// `(R A S)^-1 v` approximated as `mu U^-1 L^-1 P v`, substitutions in `fmt`.
    pub fn precond(&self, v: &[f64], fmt: Format) -> Result<Vec<f64>, RefineError> {
        let t = pow2_scale(v);
        let w: Vec<f64> = v.iter().map(|x| x / t).collect();
        let y = self.lu.solve(&w, fmt)?;
        let k = self.mu * t;
        Ok(y.iter().map(|yi| yi * k).collect())
    }

    /// `R A S` in binary64.
    pub fn scaled_matrix(&self, a: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| self.r_scale[i] * a[(i, j)] * self.s_scale[j])
    }
}

/// `b − A x` with every operation rounded in the format of `ar`.
///
/// `a` must already be rounded to that format.
pub(crate) fn residual(a: &DenseMatrix, b: &[f64], x: &[f64], ar: &Arith) -> Vec<f64> {
    let x: Vec<f64> = ar.round_slice(x);
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(&x)
                .fold(ar.round(b[i]), |s, (&aij, &xj)| ar.sub(s, ar.mul(aij, xj)))
        })
        .collect()
}

/// `A x` with every operation rounded in the format of `ar`.
pub(crate) fn matvec_in(a: &DenseMatrix, x: &[f64], ar: &Arith) -> Vec<f64> {
    let x: Vec<f64> = ar.round_slice(x);
    (0..a.rows()).map(|i| ar.dot(a.row(i), &x)).collect()
}

/// `Aᵀ y` with every operation rounded in the format of `ar`.
pub(crate) fn matvec_t_in(a: &DenseMatrix, y: &[f64], ar: &Arith) -> Vec<f64> {
    let y: Vec<f64> = ar.round_slice(y);
    let mut out = vec![0.0; a.cols()];
    for (i, &yi) in y.iter().enumerate() {
        for (o, &aij) in out.iter_mut().zip(a.row(i)) {
            *o = ar.add(*o, ar.mul(aij, yi));
        }
    }
    out
}

/// Tracks the three-strike divergence rule and the stagnation counter used
/// for escalation.
#[derive(Debug, Default)]
pub(crate) struct Monitor {
    best: f64,
    above: usize,
    stalled: usize,
    last: f64,
}

pub(crate) enum Verdict {
    Continue,
    Diverged,
    Stagnating,
}

impl Monitor {
    pub fn new(first: f64) -> Monitor {
        Monitor {
            best: first,
            above: 0,
            stalled: 0,
            last: first,
        }
    }

    pub fn observe(&mut self, berr: f64) -> Verdict {
        if !berr.is_finite() {
            return Verdict::Diverged;
        }
        if berr > 10.0 * self.best {
            self.above += 1;
        } else {
            self.above = 0;
        }
        if berr > 0.5 * self.last {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.best = self.best.min(berr);
        self.last = berr;
        if self.above >= 3 {
            Verdict::Diverged
        } else if self.stalled >= 3 {
            self.stalled = 0;
            Verdict::Stagnating
        } else {
            Verdict::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_strikes() {
        let mut m = Monitor::new(1e-3);
        assert!(matches!(m.observe(1e-1), Verdict::Continue));
        assert!(matches!(m.observe(1e-1), Verdict::Continue));
        assert!(matches!(m.observe(1e-1), Verdict::Diverged));
        let mut m = Monitor::new(1e-3);
        assert!(matches!(m.observe(f64::NAN), Verdict::Diverged));
    }

    #[test]
    fn stagnation_detected() {
        let mut m = Monitor::new(1e-6);
        assert!(matches!(m.observe(0.9e-6), Verdict::Continue));
        assert!(matches!(m.observe(0.8e-6), Verdict::Continue));
        assert!(matches!(m.observe(0.7e-6), Verdict::Stagnating));
        assert!(matches!(m.observe(1e-9), Verdict::Continue));
    }

    #[test]
    fn residual_in_fp64() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let ar = Arith::new(Format::FP64);
        assert_eq!(residual(&a, &[5.0, 11.0], &[1.0, 2.0], &ar), vec![0.0, 0.0]);
        assert_eq!(matvec_in(&a, &[1.0, 1.0], &ar), vec![3.0, 7.0]);
        assert_eq!(matvec_t_in(&a, &[1.0, 1.0], &ar), vec![4.0, 6.0]);
    }
}
