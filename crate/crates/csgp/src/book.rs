//! The book under `book/` is part of the test suite: each chapter is
//! attached here as module documentation, so `cargo test --doc` compiles
//! and runs every code block in it. A failing snippet is a failing test,
//! which keeps the guide and the library in lockstep.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/covariance.md")]
pub mod covariance {}

#[doc = include_str!("../../../book/src/sparse-cholesky.md")]
pub mod sparse_cholesky {}

#[doc = include_str!("../../../book/src/expectation-propagation.md")]
pub mod expectation_propagation {}

#[doc = include_str!("../../../book/src/model-selection.md")]
pub mod model_selection {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
