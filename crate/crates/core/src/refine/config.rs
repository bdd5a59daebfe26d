use super::RefineError;
use crate::dense::DEFAULT_THETA;
use crate::prec::Format;

/// When to apply two-sided scaling before factorizing in `fact_fmt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// Scale when the factorization format is 16 bits wide or narrower.
    Auto,
    Always,
    Never,
}

/// Precision of the triangular solves inside the GMRES-IR operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriSolveFormat {
    Work,
    Factor,
}

/// Correction solver used inside the refinement loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inner {
    /// Substitution with the low-precision factors.
    None,
    /// Preconditioned GMRES; `None` fields take format-dependent defaults.
    Gmres {
        inner_tol: Option<f64>,
        inner_maxit: Option<usize>,
        restart: Option<usize>,
    },
}

impl Inner {
    pub fn gmres() -> Inner {
        Inner::Gmres {
            inner_tol: None,
            inner_maxit: None,
            restart: None,
        }
    }
}

/// Precision assignment and stopping rules for the refinement solvers.
#[derive(Debug, Clone)]
pub struct IrConfig {
    pub fact_fmt: Format,
    pub work_fmt: Format,
    pub resid_fmt: Format,
    /// Storage format of the iterate; usually equal to `work_fmt`.
    pub x_fmt: Format,
    /// Backward-error target. `None` means `max(n u_w, 1e-14)`.
    pub tol: Option<f64>,
    pub max_iters: usize,
    pub inner: Inner,
    pub scaling: Scaling,
    pub theta: f64,
    pub tri_fmt: TriSolveFormat,
    /// Promote `x_fmt` one rung after three stagnating iterations.
    pub escalate: bool,
    /// Known solution, used only to record forward errors.
    pub reference: Option<Vec<f64>>,
}

impl IrConfig {
    /// Factorize in `fact`, work and store the iterate in `work`, compute
    /// residuals in `resid`.
    pub fn new(fact: Format, work: Format, resid: Format) -> IrConfig {
        IrConfig {
            fact_fmt: fact,
            work_fmt: work,
            resid_fmt: resid,
            x_fmt: work,
            tol: None,
            max_iters: 30,
            inner: Inner::None,
            scaling: Scaling::Auto,
            theta: DEFAULT_THETA,
            tri_fmt: TriSolveFormat::Work,
            escalate: false,
            reference: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_inner(mut self, inner: Inner) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_x_fmt(mut self, fmt: Format) -> Self {
        self.x_fmt = fmt;
        self
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_reference(mut self, x_true: Vec<f64>) -> Self {
        self.reference = Some(x_true);
        self
    }

    pub fn tol_for(&self, n: usize) -> f64 {
        self.tol
            .unwrap_or_else(|| (n as f64 * self.work_fmt.unit_roundoff()).max(1e-14))
    }

    pub(crate) fn wants_scaling(&self) -> bool {
        match self.scaling {
            Scaling::Auto => self.fact_fmt.bits() <= 16,
            Scaling::Always => true,
            Scaling::Never => false,
        }
    }

    /// Inner GMRES tolerance: 1e-4 for 16-bit factors, 1e-8 for binary32,
    /// 1e-12 otherwise.
    pub(crate) fn inner_tol(&self) -> f64 {
        if let Inner::Gmres { inner_tol: Some(t), .. } = self.inner {
            return t;
        }
        match self.fact_fmt.sig_bits() {
            s if s <= 10 => 1e-4,
            s if s <= 23 => 1e-8,
            _ => 1e-12,
        }
    }

    pub(crate) fn inner_maxit(&self, n: usize) -> usize {
        match self.inner {
            Inner::Gmres { inner_maxit: Some(m), .. } => m,
            _ => n.min(100),
        }
    }

    pub(crate) fn restart(&self) -> Option<usize> {
        match self.inner {
            Inner::Gmres { restart, .. } => restart,
            Inner::None => None,
        }
    }

    pub fn validate(&self) -> Result<(), RefineError> {
        let (uf, uw, ur) = (
            self.fact_fmt.unit_roundoff(),
            self.work_fmt.unit_roundoff(),
            self.resid_fmt.unit_roundoff(),
        );
        if !(ur <= uw && uw <= uf) {
            return Err(RefineError::InvalidConfig(format!(
                "precisions must satisfy u_r <= u_w <= u_f (got {}, {}, {})",
                self.resid_fmt, self.work_fmt, self.fact_fmt
            )));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(RefineError::InvalidConfig(format!("tolerance must be positive, got {t}")));
            }
        }
        if self.max_iters == 0 {
            return Err(RefineError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(RefineError::InvalidConfig(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        Ok(())
    }
}

/// Convergence record of one refinement run.
///
/// `backward_errors[0]` belongs to the initial solve and entry `k` to the
/// iterate after `k` corrections, so its length is `iterations + 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IrReport {
    pub iterations: usize,
    pub backward_errors: Vec<f64>,
    pub forward_errors: Option<Vec<f64>>,
    pub converged: bool,
    pub tol: f64,
    /// GMRES iterations per correction (GMRES-based solvers only).
    pub inner_iterations: Vec<usize>,
    pub shift_c: Option<u64>,
    /// Scale factor `mu` when the matrix was scaled into a narrow format.
    pub mu: Option<f64>,
    /// Headroom parameter actually used, smaller than the configured one
    /// when the scaled factorization overflowed.
    pub theta: Option<f64>,
    /// `(iteration, new format)` for every promotion of the iterate.
    pub escalations: Vec<(usize, Format)>,
    /// Triangular solves performed by the correction solver.
    pub tri_solves: usize,
    /// Rounded operations per preconditioner-operator application (least squares only).
    pub precond_ops_per_apply: Option<u64>,
    /// `‖I − VᵀV‖_F` of the last GMRES basis.
    pub basis_defects: Vec<f64>,
}

impl IrReport {
    pub fn final_backward_error(&self) -> f64 {
        self.backward_errors.last().copied().unwrap_or(f64::NAN)
    }
}
