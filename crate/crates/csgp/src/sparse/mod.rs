//! Sparse symmetric linear algebra.
//!
//! Everything the inference layer needs from a sparse SPD matrix B:
//! fill-reducing ordering, symbolic analysis with a frozen fill pattern,
//! LDLᵀ factorization, sparse-RHS solves, log-determinant, fused rank-one
//! update/downdate, single-row modification, and the selective inverse.
//!
//! A factor is mutated by at most one caller at a time; read-only
//! operations (`solve`, `logdet`, `takahashi_sparse_inverse`) take `&self`
//! and may run concurrently on a factor that nobody is mutating.

mod factor;
mod matrix;
mod modify;
mod ordering;
mod perm;
mod symbolic;
mod takahashi;

pub use factor::{ldl_factorize, LdlFactor, SolveScratch};
pub use matrix::{SparseSymMatrix, SparseVector};
pub use ordering::minimum_degree;
pub use perm::Permutation;
pub use symbolic::{symbolic_analyze, EliminationTree, NO_PARENT};
pub use takahashi::takahashi_sparse_inverse;
