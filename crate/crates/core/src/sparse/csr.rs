use super::SparseError;
use crate::dense::DenseMatrix;
use crate::prec::{Arith, Format};
use crate::refine::Operator;

/// Compressed sparse row matrix with binary64 values.
///
/// Column indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<CsrMatrix, SparseError> {
        if row_offsets.len() != n_rows + 1 || row_offsets[0] != 0 {
            return Err(SparseError::InvalidStructure("row offsets must have n_rows + 1 entries starting at 0".into()));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(SparseError::InvalidStructure("row offsets must be non-decreasing".into()));
        }
        let nnz = row_offsets[n_rows];
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(SparseError::InvalidStructure(format!(
                "expected {nnz} column indices and values, got {} and {}",
                col_indices.len(),
                values.len()
            )));
        }
        for i in 0..n_rows {
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(SparseError::IndexOutOfBounds { row: i, col: n_cols });
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SparseError::InvalidStructure(format!("row {i} has unsorted or repeated columns")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SparseError::InvalidStructure("values must be finite".into()));
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assemble from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<CsrMatrix, SparseError> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(SparseError::IndexOutOfBounds { row: i, col: j });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        // Stable sort keeps duplicates in input order, so sums are reproducible.
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        CsrMatrix::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Nonzero entries of a dense matrix.
    pub fn from_dense(a: &DenseMatrix) -> CsrMatrix {
        let mut trip = Vec::new();
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(a.rows(), a.cols(), &trip).expect("dense indices are in range")
    }

    pub fn identity(n: usize) -> CsrMatrix {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same sparsity pattern with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<CsrMatrix, SparseError> {
        CsrMatrix::new(
            self.n_rows,
            self.n_cols,
            self.row_offsets.clone(),
            self.col_indices.clone(),
            values,
        )
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
            })
    }

    /// `A x` in binary64, accumulated left to right within each row.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "matvec dimension mismatch");
        (0..self.n_rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).fold(0.0, |s, (&j, &v)| s + v * x[j])
            })
            .collect()
    }
}

impl Operator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.n_rows
    }

    fn ncols(&self) -> usize {
        self.n_cols
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }

    fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `y = A x` with values and `x` rounded to `fmt` and every multiply and add
/// rounded to `fmt`, accumulated left to right within each row.
pub fn spmv(a: &CsrMatrix, x: &[f64], fmt: Format) -> Result<Vec<f64>, SparseError> {
    if x.len() != a.n_cols {
        return Err(SparseError::DimensionMismatch {
            expected: a.n_cols,
            found: x.len(),
        });
    }
    let ar = Arith::new(fmt);
    let x = ar.round_slice(x);
    Ok((0..a.n_rows)
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .fold(0.0, |s, (&j, &v)| ar.add(s, ar.mul(ar.round(v), x[j])))
        })
        .collect())
}
