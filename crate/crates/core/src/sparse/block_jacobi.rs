use std::ops::Range;

use super::{CsrMatrix, SparseError};
use crate::dense::{lu_emulated, DenseMatrix};
use crate::prec::{Arith, Format};

/// Storage formats tried per block, coarsest first.
pub const STORAGE_LADDER: [Format; 3] = [Format::FP16, Format::FP32, Format::FP64];

/// Largest supported diagonal block.
pub const MAX_BLOCK_SIZE: usize = 32;

/// Accuracy target of one decimal digit per inverted block.
pub const DEFAULT_DIGIT_TAU: f64 = 0.1;

/// Block-Jacobi preconditioner whose inverted diagonal blocks are each
/// stored in the coarsest format that keeps their range and accuracy.
///
/// Application is always carried out in binary64 on the stored values.
#[derive(Debug, Clone)]
pub struct BlockJacobiPrecond {
    pub block_ranges: Vec<Range<usize>>,
    pub inv_blocks: Vec<DenseMatrix>,
    pub block_fmt: Vec<Format>,
    /// Blocks that were singular and replaced by the identity.
    pub singular: Vec<bool>,
}

impl BlockJacobiPrecond {
    pub fn n(&self) -> usize {
        self.block_ranges.last().map_or(0, |r| r.end)
    }

    /// Number of blocks stored in each format of [`STORAGE_LADDER`].
    pub fn format_histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for f in &self.block_fmt {
            if let Some(i) = STORAGE_LADDER.iter().position(|l| l == f) {
                h[i] += 1;
            }
        }
        h
    }
}

/// Build a block-Jacobi preconditioner with adaptive storage precision.
pub fn block_jacobi_build(a: &CsrMatrix, block_size: usize, digit_tau: f64) -> Result<BlockJacobiPrecond, SparseError> {
    block_jacobi_build_with(a, block_size, digit_tau, None)
}

/// [`block_jacobi_build`] with an optional storage format imposed on every
/// block (for example binary64 as a reference).
pub fn block_jacobi_build_with(
    a: &CsrMatrix,
    block_size: usize,
    digit_tau: f64,
    forced: Option<Format>,
) -> Result<BlockJacobiPrecond, SparseError> {
    if a.n_rows() != a.n_cols() {
        return Err(SparseError::DimensionMismatch {
            expected: a.n_rows(),
            found: a.n_cols(),
        });
    }
    if !(1..=MAX_BLOCK_SIZE).contains(&block_size) {
        return Err(SparseError::InvalidParameter(format!(
            "block size must lie in 1..={MAX_BLOCK_SIZE}, got {block_size}"
        )));
    }
    if !(digit_tau > 0.0) {
        return Err(SparseError::InvalidParameter(format!("digit_tau must be positive, got {digit_tau}")));
    }
    let n = a.n_rows();
    let mut p = BlockJacobiPrecond {
        block_ranges: Vec::new(),
        inv_blocks: Vec::new(),
        block_fmt: Vec::new(),
        singular: Vec::new(),
    };
    let mut start = 0;
    while start < n {
        let range = start..(start + block_size).min(n);
        let block = extract_block(a, range.clone());
        let (inv, singular) = match invert(&block) {
            Some(inv) => (inv, false),
            None => (DenseMatrix::identity(range.len()), true),
        };
        let fmt = forced.unwrap_or_else(|| select_format(&inv, digit_tau));
        let ar = Arith::new(fmt);
        p.inv_blocks.push(inv.rounded(&ar));
        p.block_fmt.push(fmt);
        p.singular.push(singular);
        start = range.end;
        p.block_ranges.push(range);
    }
    Ok(p)
}

fn extract_block(a: &CsrMatrix, range: Range<usize>) -> DenseMatrix {
    let mut b = DenseMatrix::zeros(range.len(), range.len());
    for i in range.clone() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if range.contains(&j) {
                b[(i - range.start, j - range.start)] = v;
            }
        }
    }
    b
}

/// Inverse in binary64 via LU, or `None` when the block is singular or the
/// inverse is not finite.
fn invert(b: &DenseMatrix) -> Option<DenseMatrix> {
    let lu = lu_emulated(b, Format::FP64).ok()?;
    let m = b.rows();
    let mut inv = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let col = lu.solve(&e, Format::FP64).ok()?;
        inv.set_col(j, &col);
    }
    inv.is_finite().then_some(inv)
}

/// First rung of the ladder whose rounding of `inv` (i) stays finite,
/// (ii) changes it by at most `digit_tau` in relative Frobenius norm and
/// (iii) leaves no row entirely zero.
pub fn select_format(inv: &DenseMatrix, digit_tau: f64) -> Format {
    let norm = inv.norm_fro();
    for fmt in STORAGE_LADDER {
        let r = inv.rounded(&Arith::new(fmt));
        if !r.is_finite() {
            continue;
        }
        if r.sub(inv).norm_fro() > digit_tau * norm {
            continue;
        }
        if (0..r.rows()).any(|i| r.row(i).iter().all(|&x| x == 0.0)) {
            continue;
        }
        return fmt;
    }
    Format::FP64
}

/// `y = P v`, block by block in binary64.
pub fn block_jacobi_apply(p: &BlockJacobiPrecond, v: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), p.n(), "preconditioner dimension mismatch");
    let mut y = vec![0.0; v.len()];
    for (range, inv) in p.block_ranges.iter().zip(&p.inv_blocks) {
        let part = inv.matvec(&v[range.clone()]);
        y[range.clone()].copy_from_slice(&part);
    }
    y
}
