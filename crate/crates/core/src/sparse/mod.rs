//! Sparse and dense-block storage plus the kernels every other module uses.

mod csr;
pub mod io;
mod multivector;
mod ops;
mod partition;

pub use csr::{Idx, SparseMatrix};
pub use multivector::MultiVector;
pub use ops::{galerkin_product, galerkin_product_unsymmetrized, spgemm, spmv, transpose};
pub use partition::{CfPartition, NodeLabel};
