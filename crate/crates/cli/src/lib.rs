//! Experiment harness for the mixed-precision laboratory: matrix generation
//! and Matrix Market ingestion, key=value experiment specs, and sweeps that
//! emit one CSV row per run.

pub mod experiment;
pub mod gen;
pub mod mm;
pub mod spec;

use mplab_core::dense::DenseMatrix;
use mplab_core::sparse::CsrMatrix;

/// A loaded or generated matrix in its natural storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Matrix {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Matrix::Dense(d) => d.clone(),
            Matrix::Sparse(s) => s.to_dense(),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            Matrix::Dense(d) => CsrMatrix::from_dense(d),
            Matrix::Sparse(s) => s.clone(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Matrix::Dense(d) => d.shape(),
            Matrix::Sparse(s) => (s.n_rows(), s.n_cols()),
        }
    }
}
