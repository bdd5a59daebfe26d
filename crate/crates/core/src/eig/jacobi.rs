use super::{EigError, EigenPairs};
use crate::dense::DenseMatrix;
use crate::prec::{Arith, Format};

/// Sweep cap of [`jacobi_eig`].
pub const MAX_SWEEPS: usize = 30;

/// Cyclic Jacobi eigensolver with every arithmetic operation rounded to `fmt`.
///
/// Stops when the off-diagonal Frobenius mass is at most `tol * ‖a‖_F`, or
/// when a full sweep finds no entry large enough to change the diagonal in
/// `fmt`. Eigenvalues are returned in ascending order with eigenvectors as
/// matching columns.
pub fn jacobi_eig(a: &DenseMatrix, fmt: Format, tol: f64) -> Result<EigenPairs, EigError> {
    super::check_symmetric(a)?;
    let n = a.rows();
    let ar = Arith::new(fmt);
    let mut w = a.rounded(&ar);
    let mut v = DenseMatrix::identity(n);
    let target = tol * a.norm_fro();
    let u = fmt.unit_roundoff();

    let mut converged = off_diagonal(&w) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotations = 0;
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == 0.0 || apq.abs() <= u * (w[(p, p)] * w[(q, q)]).abs().sqrt() {
                    continue;
                }
                rotate(&mut w, &mut v, p, q, &ar);
                rotations += 1;
            }
        }
        if !w.is_finite() {
            return Err(EigError::NonFinite { sweep: sweeps });
        }
        converged = rotations == 0 || off_diagonal(&w) <= target;
    }
    if !converged {
        return Err(EigError::NoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let lambda = order.iter().map(|&i| w[(i, i)]).collect();
    let x = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenPairs { x, lambda, fmt })
}

fn off_diagonal(w: &DenseMatrix) -> f64 {
    let n = w.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += w[(i, j)] * w[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Annihilate `w[p][q]` with a rotation computed and applied in `ar`.
fn rotate(w: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, ar: &Arith) {
    let n = w.rows();
    let apq = w[(p, q)];
    let app = w[(p, p)];
    let aqq = w[(q, q)];
    let theta = ar.div(ar.sub(aqq, app), ar.mul(2.0, apq));
    // For huge θ, θ² would overflow; t ≈ 1/(2θ) is then exact to working accuracy.
    let t = if theta.abs() * ar.format().unit_roundoff().sqrt() > 1.0 {
        ar.div(0.5, theta)
    } else {
        let root = ar.sqrt(ar.add(ar.mul(theta, theta), 1.0));
        let t = ar.div(1.0, ar.add(theta.abs(), root));
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = ar.div(1.0, ar.sqrt(ar.add(ar.mul(t, t), 1.0)));
    let s = ar.mul(t, c);
    let tapq = ar.mul(t, apq);

    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = w[(r, p)];
        let arq = w[(r, q)];
        let np = ar.sub(ar.mul(c, arp), ar.mul(s, arq));
        let nq = ar.add(ar.mul(s, arp), ar.mul(c, arq));
        w[(r, p)] = np;
        w[(p, r)] = np;
        w[(r, q)] = nq;
        w[(q, r)] = nq;
    }
    w[(p, p)] = ar.sub(app, tapq);
    w[(q, q)] = ar.add(aqq, tapq);
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;

    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = ar.sub(ar.mul(c, vrp), ar.mul(s, vrq));
        v[(r, q)] = ar.add(ar.mul(s, vrp), ar.mul(c, vrq));
    }
}
