use super::{DenseError, DenseMatrix};
use crate::prec::{Arith, Format};

/// Which triangle of the matrix a substitution reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// `alpha * A * B + beta * C` with inputs stored in `in_fmt` and every
/// multiply and accumulate rounded to `acc_fmt`.
///
/// `acc_fmt == in_fmt` models a plain low-precision GEMM; a wider `acc_fmt`
/// models low-precision inputs with a wider accumulator. When `in_fmt` is
/// wider than `acc_fmt` the stored inputs are additionally converted to
/// `acc_fmt` before use.
pub fn gemm_emulated(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    alpha: f64,
    beta: f64,
    in_fmt: Format,
    acc_fmt: Format,
) -> Result<DenseMatrix, DenseError> {
    if a.cols() != b.rows() || c.shape() != (a.rows(), b.cols()) {
        return Err(DenseError::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}, C is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            c.rows(),
            c.cols()
        )));
    }
    let inp = Arith::new(in_fmt);
    let acc = Arith::new(acc_fmt);
    let load = |x: f64| acc.round(inp.round(x));
    let a = a.map(load);
    // Column-major copy of B so the inner loop is contiguous.
    let bt = b.transpose().map(load);
    let alpha = acc.round(alpha);
    let beta = acc.round(beta);
    let plain = alpha == 1.0 && beta == 0.0;

    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let ai = a.row(i);
        for j in 0..b.cols() {
            let s = acc.dot(ai, bt.row(j));
            out[(i, j)] = if plain {
                s
            } else {
                let cij = acc.round(c[(i, j)]);
                acc.add(acc.mul(alpha, s), acc.mul(beta, cij))
            };
        }
    }
    Ok(out)
}

/// Forward or back substitution with every operation rounded to `fmt`.
///
/// Entries of `t` and `b` are rounded to `fmt` as they are read. Only the
/// triangle named by `side` is accessed.
pub fn tri_solve_emulated(
    t: &DenseMatrix,
    b: &[f64],
    side: Side,
    unit_diag: bool,
    fmt: Format,
) -> Result<Vec<f64>, DenseError> {
    substitute(t, b, side, unit_diag, fmt, false)
}

/// Solve `t^T y = b` reading the stored triangle `side` of `t`.
///
/// With `side = Upper` this is the forward solve with `R^T` used by
/// Cholesky-based preconditioners, without materialising the transpose.
pub fn tri_solve_transpose_emulated(
    t: &DenseMatrix,
    b: &[f64],
    side: Side,
    unit_diag: bool,
    fmt: Format,
) -> Result<Vec<f64>, DenseError> {
    substitute(t, b, side, unit_diag, fmt, true)
}

fn substitute(
    t: &DenseMatrix,
    b: &[f64],
    side: Side,
    unit_diag: bool,
    fmt: Format,
    transposed: bool,
) -> Result<Vec<f64>, DenseError> {
    let n = super::require_square(t)?;
    if b.len() != n {
        return Err(DenseError::DimensionMismatch(format!(
            "triangular system of order {n} with right-hand side of length {}",
            b.len()
        )));
    }
    let ar = Arith::new(fmt);
    let get = |i: usize, j: usize| ar.round(if transposed { t[(j, i)] } else { t[(i, j)] });
    // Transposing flips which way the substitution runs.
    let forward = (side == Side::Lower) != transposed;

    let mut y = ar.round_slice(b);
    let order: Box<dyn Iterator<Item = usize>> = if forward {
        Box::new(0..n)
    } else {
        Box::new((0..n).rev())
    };
    for i in order {
        let mut s = y[i];
        if forward {
            for j in 0..i {
                s = ar.sub(s, ar.mul(get(i, j), y[j]));
            }
        } else {
            for j in i + 1..n {
                s = ar.sub(s, ar.mul(get(i, j), y[j]));
            }
        }
        if !unit_diag {
            let d = get(i, i);
            if d == 0.0 {
                return Err(DenseError::ZeroDiagonal { index: i });
            }
            s = ar.div(s, d);
        }
        y[i] = s;
    }
    Ok(y)
}
