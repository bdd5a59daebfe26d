//! Mixed-precision numerical linear algebra on emulated floating-point formats.
//!
//! * [`prec`]: formats, rounding and seeded randomness.
//! * [`dense`]: dense matrices, emulated GEMM/LU/Cholesky/triangular solves,
//!   equilibration and scaling into narrow formats.
//! * [`refine`]: iterative refinement, MGS-GMRES, GMRES-IR and least squares.
//! * [`qilu`]: LU factorization in 32-bit fixed-point integer arithmetic.
//! * [`eig`]: symmetric eigenpair refinement.
//! * [`sparse`]: CSR kernels, clustered value compression, adaptive block-Jacobi and PCG.

pub mod dense;
pub mod eig;
pub mod prec;
pub mod qilu;
pub mod refine;
pub mod sparse;

pub use prec::{Arith, Format, Rng, Rounding};
