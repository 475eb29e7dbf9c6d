//! Complex sparse and dense kernels.

mod eig;
mod gmres;
mod lu;
mod sparse;

pub use eig::hermitian_gen_eig;
pub use gmres::{gmres, GmresOptions, GmresResult};
pub use lu::{lu_factor, lu_solve, Factorization};
pub use sparse::ComplexSparseMatrix;
