use super::kernels::{tri_solve_emulated, Side};
use super::{require_square, DenseError, DenseMatrix};
use crate::prec::{Arith, Format};

/// `P A = L U` with `L` unit lower triangular.
///
/// `perm[i]` is the row of `A` that ends up in row `i` of `P A`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    pub perm: Vec<usize>,
    pub l: DenseMatrix,
    pub u: DenseMatrix,
    pub fmt: Format,
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// `P b`.
    pub fn permute(&self, b: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&p| b[p]).collect()
    }

    /// Solve `A x = b` by two substitutions carried out in `fmt`.
    pub fn solve(&self, b: &[f64], fmt: Format) -> Result<Vec<f64>, DenseError> {
        let y = tri_solve_emulated(&self.l, &self.permute(b), Side::Lower, true, fmt)?;
        tri_solve_emulated(&self.u, &y, Side::Upper, false, fmt)
    }

    /// `P A` for the matrix that was factorized.
    pub fn permute_rows(&self, a: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(self.perm[i], j)])
    }

    /// Growth factor `max |u_ij| / max |a_ij|`.
    pub fn growth(&self, a: &DenseMatrix) -> f64 {
        self.u.max_abs() / a.max_abs()
    }
}

/// Right-looking LU with partial pivoting, every operation rounded to `fmt`.
///
/// Among equal pivot candidates the smallest row index wins. The input is
/// rounded to `fmt` first; an entry that overflows on conversion is reported
/// as [`DenseError::OverflowInFactor`] at step 0.
pub fn lu_emulated(a: &DenseMatrix, fmt: Format) -> Result<LuFactors, DenseError> {
    let n = require_square(a)?;
    let ar = Arith::new(fmt);
    let mut w = a.rounded(&ar);
    if !w.is_finite() {
        return Err(DenseError::OverflowInFactor { step: 0 });
    }
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let mut p = k;
        let mut best = w[(k, k)].abs();
        for i in k + 1..n {
            let v = w[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return Err(DenseError::ExactZeroPivot { column: k });
        }
        w.swap_rows(k, p);
        perm.swap(k, p);

        let pivot = w[(k, k)];
        let (head, tail) = w_split(&mut w, k);
        let pivot_row = &head[k + 1..];
        let mut finite = true;
        for row in tail.chunks_mut(n) {
            let l = ar.div(row[k], pivot);
            row[k] = l;
            finite &= l.is_finite();
            if l == 0.0 {
                continue;
            }
            for (x, &ukj) in row[k + 1..].iter_mut().zip(pivot_row) {
                *x = ar.sub(*x, ar.mul(l, ukj));
                finite &= x.is_finite();
            }
        }
        if !finite {
            return Err(DenseError::OverflowInFactor { step: k });
        }
    }

    let l = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => w[(i, j)],
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    });
    let u = DenseMatrix::from_fn(n, n, |i, j| if i <= j { w[(i, j)] } else { 0.0 });
    Ok(LuFactors { perm, l, u, fmt })
}

/// Row `k` and the rows below it as disjoint slices.
fn w_split(w: &mut DenseMatrix, k: usize) -> (&[f64], &mut [f64]) {
    let n = w.cols();
    let (head, tail) = w.data_mut().split_at_mut((k + 1) * n);
    (&head[k * n..], tail)
}
