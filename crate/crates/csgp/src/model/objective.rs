//! The MAP objective: −(log Z_EP + log p(θ)) over log-hyperparameters.
//!
//! The prior sits on the positive scales σ = √σ² and each l_k, with the
//! log-transform Jacobian included, so the objective is a proper negative
//! log posterior density in the optimization variables. EP always runs to
//! convergence before a gradient is trusted; a non-converged run still
//! yields a value but is flagged so the line search treats the point as
//! failed.

use super::prior::{log_prior_and_grad, HalfStudentTPrior};
use super::ModelConfig;
use crate::data::Dataset;
use crate::ep::{ep_gradient, run_sparse_ep_warm, EpState, SiteParams};
use crate::kernel::{build_kernel_matrix, Hyperparams};

/// One objective evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// −(log Z_EP + log prior); +∞ when the kernel or factorization failed.
    pub value: f64,
    pub grad: Vec<f64>,
    /// EP reached its tolerance; gradients are only exact then.
    pub converged: bool,
    pub log_z: f64,
}

/// log p(θ) summed over σ and the length-scales, in log-parameter space
/// (Jacobian included), with its gradient.
pub fn log_prior_total(
    log_theta: &[f64],
    prior: &HalfStudentTPrior,
) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; log_theta.len()];
    // σ = exp(x₀/2): log p_x = log p(σ) + log σ − log 2.
    let sigma = (0.5 * log_theta[0]).exp();
    let (lp, lg) = log_prior_and_grad(sigma, prior);
    value += lp + 0.5 * log_theta[0] - std::f64::consts::LN_2;
    grad[0] = 0.5 * lg + 0.5;
    // l_k = exp(x_k): log p_x = log p(l) + log l.
    for (k, &x) in log_theta.iter().enumerate().skip(1) {
        let l = x.exp();
        let (lp, lg) = log_prior_and_grad(l, prior);
        value += lp + x;
        grad[k] = lg + 1.0;
    }
    (value, grad)
}

/// Stateful objective with a warm-start cache of EP site parameters.
pub struct MapObjective<'a> {
    dataset: Option<&'a Dataset>,
    config: &'a ModelConfig,
    warm: Option<(Vec<f64>, SiteParams)>,
    pub evaluations: usize,
}

impl<'a> MapObjective<'a> {
    pub fn new(dataset: &'a Dataset, config: &'a ModelConfig) -> Self {
        Self {
            dataset: Some(dataset),
            config,
            warm: None,
            evaluations: 0,
        }
    }

    /// Degenerate objective with no data: pure negative log prior.
    pub fn prior_only(config: &'a ModelConfig) -> Self {
        Self {
            dataset: None,
            config,
            warm: None,
            evaluations: 0,
        }
    }

    pub fn eval(&mut self, log_theta: &[f64]) -> Evaluation {
        self.evaluations += 1;
        let (prior_v, prior_g) = log_prior_total(log_theta, &self.config.prior);
        let Some(ds) = self.dataset else {
            return Evaluation {
                value: -prior_v,
                grad: prior_g.iter().map(|g| -g).collect(),
                converged: true,
                log_z: 0.0,
            };
        };

        let hyp = Hyperparams::from_log_params(self.config.kind, log_theta);
        let bundle = build_kernel_matrix(&ds.x, &hyp, self.config.jitter_rel);
        let warm_sites = self.warm.as_ref().and_then(|(lt, sites)| {
            let moved = lt
                .iter()
                .zip(log_theta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (moved < self.config.warm_start_threshold).then_some(sites)
        });

        let state = match run_sparse_ep_warm(bundle.k(), &ds.y, &self.config.ep, warm_sites) {
            Ok(s) => s,
            Err(err) => {
                log::warn!(target: "csgp::model", "objective failed at θ: {err}");
                return Evaluation {
                    value: f64::INFINITY,
                    grad: vec![0.0; log_theta.len()],
                    converged: false,
                    log_z: f64::NEG_INFINITY,
                };
            }
        };
        let converged = state.converged;
        let log_z = state.log_z;
        let grad = if converged {
            match ep_gradient(&state, &bundle) {
                Ok(g) => g
                    .iter()
                    .zip(&prior_g)
                    .map(|(a, b)| -(a + b))
                    .collect(),
                Err(_) => vec![0.0; log_theta.len()],
            }
        } else {
            vec![0.0; log_theta.len()]
        };
        self.warm = Some((log_theta.to_vec(), state.sites.clone()));
        Evaluation {
            value: -(log_z + prior_v),
            grad,
            converged,
            log_z,
        }
    }

    /// Run EP to convergence at `log_theta` (warm-started when possible)
    /// and return the full state.
    pub fn state_at(&mut self, log_theta: &[f64]) -> Result<EpState, crate::SparseError> {
        let ds = self.dataset.expect("state_at needs a dataset");
        let hyp = Hyperparams::from_log_params(self.config.kind, log_theta);
        let bundle = build_kernel_matrix(&ds.x, &hyp, self.config.jitter_rel);
        let warm_sites = self.warm.as_ref().map(|(_, s)| s);
        let state = run_sparse_ep_warm(bundle.k(), &ds.y, &self.config.ep, warm_sites)?;
        self.warm = Some((log_theta.to_vec(), state.sites.clone()));
        Ok(state)
    }
}
