//! Classical algebraic multigrid preconditioners for sparse symmetric systems.
//!
//! The crate covers the whole pipeline: sparse kernels, smoothers, near-kernel
//! test spaces, strength of connection with PMIS coarsening, four
//! interpolation schemes, the multilevel hierarchy, and the Krylov solvers it
//! preconditions. Everything is generic over [`Scalar`] (`f32` or `f64`).

pub mod coarsen;
pub mod dense;
pub mod dsmat;
pub mod error;
pub mod hierarchy;
pub mod interp;
pub mod krylov;
pub mod problems;
pub mod scalar;
pub mod smoother;
pub mod sparse;
pub mod testspace;

pub use error::{AmgError, Result};
pub use scalar::Scalar;
pub use sparse::{CfPartition, MultiVector, NodeLabel, SparseMatrix};

/// Double-precision CSR matrix.
pub type Csr = SparseMatrix<f64>;
/// Single-precision CSR matrix.
pub type Csr32 = SparseMatrix<f32>;
/// Double-precision block of vectors.
pub type Vectors = MultiVector<f64>;
