//! Hyperparameter learning: priors, the MAP objective, and its optimizer.

mod objective;
mod optimize;
mod prior;

pub use objective::{log_prior_total, Evaluation, MapObjective};
pub use optimize::{default_init, optimize, IterRecord, OptimizeResult};
pub use prior::{log_prior_and_grad, HalfStudentTPrior};

use crate::ep::EpConfig;
use crate::kernel::KernelKind;

/// Optimizer controls.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop when ‖∇‖_∞ drops below this.
    pub grad_tol: f64,
    /// Starting `[log σ², log l₁, …]`; derived from the data when absent.
    pub init_log_params: Option<Vec<f64>>,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            grad_tol: 1e-3,
            init_log_params: None,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
        }
    }
}

/// Everything a training run needs.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub kind: KernelKind,
    pub jitter_rel: f64,
    pub ep: EpConfig,
    pub prior: HalfStudentTPrior,
    pub opt: OptimizerConfig,
    /// Reuse EP sites between objective evaluations when the
    /// log-hyperparameters moved less than this (∞-norm); larger jumps
    /// reset the sites to zero.
    pub warm_start_threshold: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::Pp3,
            jitter_rel: 1e-8,
            ep: EpConfig::default(),
            prior: HalfStudentTPrior::default(),
            opt: OptimizerConfig::default(),
            warm_start_threshold: 0.5,
            seed: 0,
        }
    }
}
