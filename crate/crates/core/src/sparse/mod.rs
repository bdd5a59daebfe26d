//! Sparse matrices: CSR kernels, clustered value compression, an adaptive
//! storage-precision block-Jacobi preconditioner and PCG.

mod block_jacobi;
mod cluster;
mod csr;
mod kmeans;
mod pcg;

pub use block_jacobi::{
    block_jacobi_apply, block_jacobi_build, block_jacobi_build_with, select_format, BlockJacobiPrecond,
    DEFAULT_DIGIT_TAU, MAX_BLOCK_SIZE, STORAGE_LADDER,
};
pub use cluster::{
    compress_clustered, compress_clustered_with, footprint_bits, spmv_clustered, ClusteredCsr, RESIDUAL_LADDER,
};
pub use csr::{spmv, CsrMatrix};
pub use kmeans::{kmeans1d, kmeans1d_detailed, nearest, KMeans1d, MAX_CLUSTERS};
pub use pcg::{pcg, PcgOutput};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SparseError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) is out of bounds")]
    IndexOutOfBounds { row: usize, col: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("only {distinct} distinct values for {k} clusters")]
    DegenerateInput { distinct: usize, k: usize },
    #[error("no convergence after {iterations} iterations")]
    NotConverged { iterations: usize, partial: Box<PcgOutput> },
    #[error("non-positive curvature at iteration {iteration}")]
    IndefiniteDetected { iteration: usize },
}
