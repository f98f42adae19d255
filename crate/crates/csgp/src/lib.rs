//! Binary Gaussian-process classification that stays fast on large inputs by
//! pairing compactly supported covariance functions with sparse linear
//! algebra.
//!
//! Compactly supported kernels produce covariance matrices that are mostly
//! zeros, and everything downstream is built to never densify them: the EP
//! posterior approximation runs on an incrementally row-modified sparse LDLᵀ
//! factorization, marginal-likelihood gradients use a selective inverse
//! restricted to the factor's fill pattern, and hyperparameters are found by
//! quasi-Newton ascent of the EP evidence plus half-Student-t priors.
//!
//! See the book under `book/` for a guided tour; the `csgp` binary exposes
//! the `synth`, `train`, `predict`, `cv` and `bench` subcommands.

pub mod bench;
pub mod book;
pub mod config;
pub mod data;
pub mod ep;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod model_io;
pub mod sparse;

pub use bench::{run_scenario, BenchReport, BenchScenario};
pub use config::Settings;
pub use data::{load_csv, save_csv, synth_clusters, Dataset, InputMatrix, Standardization};
pub use metrics::{classification_error, cross_validate, fill_stats, mean_nlpd, CvReport, FillStats};
pub use model_io::TrainedModel;
pub use ep::{
    ep_gradient, log_marginal, predict, run_dense_ep, run_sparse_ep, run_sparse_ep_warm,
    DenseEpState, EpConfig, EpDiagnostics, EpState, Prediction, SiteOrder, SiteParams,
};
pub use error::{ConfigError, DataError, EpError, SparseError};
pub use kernel::{
    build_kernel_matrix, build_kernel_values, cross_kernel, kernel_value, kernel_value_gradients,
    scaled_distance, smoothness_exponent, Hyperparams, KernelKind, KernelMatrixBundle,
};
pub use model::{
    log_prior_and_grad, optimize, HalfStudentTPrior, MapObjective, ModelConfig, OptimizeResult,
    OptimizerConfig,
};
pub use sparse::{
    ldl_factorize, minimum_degree, symbolic_analyze, takahashi_sparse_inverse, EliminationTree,
    LdlFactor, Permutation, SolveScratch, SparseSymMatrix, SparseVector,
};
