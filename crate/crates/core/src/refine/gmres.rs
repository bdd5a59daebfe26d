use super::orthogonality_defect;
use crate::dense::DenseMatrix;
use crate::prec::{Arith, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresStatus {
    /// Relative preconditioned residual estimate reached the tolerance.
    Converged,
    /// The Krylov space became invariant (`h_{j+1,j} = 0`); the solution
    /// is exact in the space built so far, so this counts as convergence.
    Breakdown,
    /// The iteration cap was hit before the tolerance.
    Stagnation,
}

#[derive(Debug, Clone)]
pub struct GmresOutput {
    pub z: Vec<f64>,
    /// Estimated relative preconditioned residual from the Givens recurrence;
    /// entry 0 is 1 and entry `k` follows iteration `k`.
    pub res_history: Vec<f64>,
    /// `‖I − VᵀV‖_F` of the basis of the final cycle.
    pub basis_defect: f64,
    pub iterations: usize,
    pub status: GmresStatus,
}

impl GmresOutput {
    pub fn converged(&self) -> bool {
        self.status != GmresStatus::Stagnation
    }
}

/// Left-preconditioned MGS-GMRES for `M⁻¹ A z = M⁻¹ rhs`, starting from
/// `z = 0`, without restarts.
///
/// `apply_op` computes `A v` and `precond` computes `M⁻¹ v`; their outputs
/// are rounded to `fmt`, and every other operation (orthogonalization,
/// Givens rotations, the small triangular solve and the update) is
/// performed in `fmt`.
pub fn gmres(
    apply_op: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    tol: f64,
    maxit: usize,
    fmt: Format,
) -> GmresOutput {
    gmres_restarted(apply_op, precond, rhs, tol, maxit, fmt, None)
}

/// [`gmres`] restarted every `restart` iterations (`None`: never).
pub fn gmres_restarted(
    apply_op: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    tol: f64,
    maxit: usize,
    fmt: Format,
    restart: Option<usize>,
) -> GmresOutput {
    let ar = Arith::new(fmt);
    let n = rhs.len();
    let rhs = ar.round_slice(rhs);
    let mut z = vec![0.0; n];
    let r0 = ar.round_slice(&precond(&rhs));
    let beta0 = ar.norm2(&r0);
    let mut out = GmresOutput {
        z: Vec::new(),
        res_history: vec![1.0],
        basis_defect: 0.0,
        iterations: 0,
        status: GmresStatus::Converged,
    };
    if beta0 == 0.0 {
        out.z = z;
        return out;
    }

    let cycle_len = restart.unwrap_or(maxit).max(1);
    let mut r = r0;
    loop {
        let m = cycle_len.min(maxit - out.iterations);
        let cycle = arnoldi_cycle(apply_op, precond, &r, m, beta0, tol, &ar);
        for (zi, ci) in z.iter_mut().zip(&cycle.dz) {
            *zi = ar.add(*zi, *ci);
        }
        out.iterations += cycle.steps;
        out.res_history.extend(&cycle.history);
        out.basis_defect = cycle.defect;
        if let Some(status) = cycle.done {
            out.status = status;
            break;
        }
        if out.iterations >= maxit {
            out.status = GmresStatus::Stagnation;
            break;
        }
        // Restart: fresh preconditioned residual of the current iterate.
        let az = ar.round_slice(&apply_op(&z));
        let diff: Vec<f64> = rhs.iter().zip(&az).map(|(&b, &p)| ar.sub(b, p)).collect();
        r = ar.round_slice(&precond(&diff));
    }
    out.z = z;
    out
}

struct Cycle {
    dz: Vec<f64>,
    history: Vec<f64>,
    defect: f64,
    steps: usize,
    done: Option<GmresStatus>,
}

fn arnoldi_cycle(
    apply_op: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    r: &[f64],
    m: usize,
    beta0: f64,
    tol: f64,
    ar: &Arith,
) -> Cycle {
    let n = r.len();
    let beta = ar.norm2(r);
    if beta == 0.0 {
        return Cycle {
            dz: vec![0.0; n],
            history: Vec::new(),
            defect: 0.0,
            steps: 0,
            done: Some(GmresStatus::Converged),
        };
    }
    let mut v: Vec<Vec<f64>> = vec![r.iter().map(|&x| ar.div(x, beta)).collect()];
    // Column j of the Hessenberg matrix holds j + 2 entries.
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut cs: Vec<f64> = Vec::with_capacity(m);
    let mut sn: Vec<f64> = Vec::with_capacity(m);
    let mut g = vec![beta];
    let mut history = Vec::with_capacity(m);
    let mut done = None;

    for j in 0..m {
        let av = ar.round_slice(&apply_op(&v[j]));
        let mut w = ar.round_slice(&precond(&av));
        let mut col = vec![0.0; j + 2];
        for (i, vi) in v.iter().enumerate() {
            let hij = ar.dot(&w, vi);
            col[i] = hij;
            for (wk, &vk) in w.iter_mut().zip(vi) {
                *wk = ar.sub(*wk, ar.mul(hij, vk));
            }
        }
        let hnext = ar.norm2(&w);
        col[j + 1] = hnext;

        for i in 0..j {
            let t = ar.add(ar.mul(cs[i], col[i]), ar.mul(sn[i], col[i + 1]));
            col[i + 1] = ar.sub(ar.mul(cs[i], col[i + 1]), ar.mul(sn[i], col[i]));
            col[i] = t;
        }
        let (c, s, rr) = givens(col[j], col[j + 1], ar);
        col[j] = rr;
        col[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(ar.mul(-s, g[j]));
        g[j] = ar.mul(c, g[j]);
        h.push(col);

        let rel = g[j + 1].abs() / beta0;
        history.push(rel);
        if hnext == 0.0 {
            done = Some(GmresStatus::Breakdown);
        } else if rel <= tol {
            done = Some(GmresStatus::Converged);
        }
        if done.is_some() || j + 1 == m {
            if hnext != 0.0 {
                v.push(w.iter().map(|&x| ar.div(x, hnext)).collect());
            }
            break;
        }
        v.push(w.iter().map(|&x| ar.div(x, hnext)).collect());
    }

    let k = h.len();
    // Back substitution for the k x k upper-triangular system.
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (l, yl) in y.iter().enumerate().skip(i + 1) {
            s = ar.sub(s, ar.mul(h[l][i], *yl));
        }
        y[i] = if h[i][i] == 0.0 { 0.0 } else { ar.div(s, h[i][i]) };
    }
    let mut dz = vec![0.0; n];
    for (vi, &yi) in v.iter().zip(&y) {
        for (d, &x) in dz.iter_mut().zip(vi) {
            *d = ar.add(*d, ar.mul(yi, x));
        }
    }

    let basis = DenseMatrix::from_fn(n, v.len(), |i, j| v[j][i]);
    Cycle {
        dz,
        history,
        defect: orthogonality_defect(&basis),
        steps: k,
        done,
    }
}

/// Rotation `(c, s)` with `[c s; -s c] [a; b] = [r; 0]`, scaled to avoid
/// overflow of `a² + b²` in narrow formats.
fn givens(a: f64, b: f64, ar: &Arith) -> (f64, f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0, a);
    }
    let m = a.abs().max(b.abs());
    let (ta, tb) = (ar.div(a, m), ar.div(b, m));
    let r = ar.mul(m, ar.sqrt(ar.add(ar.mul(ta, ta), ar.mul(tb, tb))));
    (ar.div(a, r), ar.div(b, r), r)
}
