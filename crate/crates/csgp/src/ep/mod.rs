//! Expectation propagation for probit GP classification.
//!
//! The posterior is approximated by Gaussian site functions in natural
//! parameters (ν̃ᵢ, τ̃ᵢ). All linear algebra runs through the SPD matrix
//! `B = I + S K S` with `S = diag(√τ̃ᵢ)` — this τ̃-scaled form equals the
//! usual `I + Σ̃^{-1/2} K Σ̃^{-1/2}` wherever the latter is defined and stays
//! well-defined for empty sites (τ̃ᵢ = 0).
//!
//! Two interchangeable engines are provided: [`run_sparse_ep`] keeps an
//! incrementally row-modified sparse LDLᵀ factor of B, and [`run_dense_ep`]
//! is the classical reference that carries the full posterior covariance
//! with rank-one updates. They must agree to tight tolerance on any input;
//! the dense engine exists to keep the sparse one honest.

mod dense_run;
mod marginal;
pub mod normal;
mod predict;
mod probit;
mod sparse_run;

pub use dense_run::{run_dense_ep, DenseEpState};
pub use marginal::{ep_gradient, log_marginal};
pub use predict::{predict, Prediction};
pub use probit::{cavity, probit_moments, site_update, TiltedMoments};
pub use sparse_run::{run_sparse_ep, run_sparse_ep_warm, state_from_sites};

use crate::sparse::{LdlFactor, SparseSymMatrix};

/// Site visitation order within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteOrder {
    /// Natural index order, 0..n.
    Natural,
    /// A fresh seeded shuffle every sweep.
    Random,
}

/// EP loop controls.
#[derive(Debug, Clone)]
pub struct EpConfig {
    /// Stop when |Δ log Z_EP| between sweeps drops below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Convex damping factor on site updates; 1.0 applies them undamped.
    pub damping: f64,
    pub site_order: SiteOrder,
    /// Clamp negative new site precisions to zero (keeping B SPD) instead
    /// of skipping the update.
    pub clamp_negative_tau: bool,
    /// Seed for the random site order.
    pub seed: u64,
}

impl Default for EpConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_sweeps: 100,
            damping: 1.0,
            site_order: SiteOrder::Natural,
            clamp_negative_tau: true,
            seed: 0,
        }
    }
}

impl EpConfig {
    /// Tight settings for oracle comparisons and gradient checks.
    pub fn strict() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 300,
            ..Self::default()
        }
    }
}

/// Natural-parameter sites plus the running γ = K ν̃ vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteParams {
    pub nu_tilde: Vec<f64>,
    pub tau_tilde: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl SiteParams {
    pub fn zeros(n: usize) -> Self {
        Self {
            nu_tilde: vec![0.0; n],
            tau_tilde: vec![0.0; n],
            gamma: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nu_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu_tilde.is_empty()
    }

    /// Recompute γ = K ν̃ from scratch.
    pub fn refresh_gamma(&mut self, k: &SparseSymMatrix) {
        k.matvec(&self.nu_tilde, &mut self.gamma);
    }

    /// ‖γ − K ν̃‖_∞, the drift of the incrementally maintained vector.
    pub fn gamma_residual(&self, k: &SparseSymMatrix) -> f64 {
        let mut fresh = vec![0.0; self.len()];
        k.matvec(&self.nu_tilde, &mut fresh);
        self.gamma
            .iter()
            .zip(&fresh)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Counters and traces reported by an EP run.
#[derive(Debug, Clone, Default)]
pub struct EpDiagnostics {
    /// Sites skipped because the cavity precision was not positive.
    pub skipped_cavities: usize,
    /// Updates whose new τ̃ went negative and was clamped to zero.
    pub clamped_sites: usize,
    /// Full refactorizations forced by a failed incremental modification.
    pub refactorizations: usize,
    /// log Z_EP at the end of each sweep.
    pub sweep_log_z: Vec<f64>,
    /// Largest ‖γ − K ν̃‖_∞ observed at a sweep boundary before refresh.
    pub max_gamma_residual: f64,
}

/// Converged (or stopped) sparse EP posterior approximation.
#[derive(Debug)]
pub struct EpState {
    /// Factor of the current B = I + S K S.
    pub factor: LdlFactor,
    /// The current B itself, kept in step with the factor.
    pub b_matrix: SparseSymMatrix,
    pub sites: SiteParams,
    pub log_z: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// |Δ log Z_EP| of the final sweep.
    pub delta_log_z: f64,
    pub diagnostics: EpDiagnostics,
}

impl EpState {
    pub fn n(&self) -> usize {
        self.sites.len()
    }
}

/// Shared per-sweep damped update with the non-negativity clamp.
/// Returns `(ν̃_new, τ̃_new, clamped)`.
pub(crate) fn damp_and_clamp(
    nu_old: f64,
    tau_old: f64,
    nu_raw: f64,
    tau_raw: f64,
    damping: f64,
    clamp: bool,
) -> Option<(f64, f64, bool)> {
    let nu_new = (1.0 - damping) * nu_old + damping * nu_raw;
    let tau_new = (1.0 - damping) * tau_old + damping * tau_raw;
    if !tau_new.is_finite() || !nu_new.is_finite() {
        return None;
    }
    if tau_new < 0.0 {
        if clamp {
            // τ̃ = 0 forces ν̃ = 0: a site with no precision carries no mean.
            return Some((0.0, 0.0, true));
        }
        return None;
    }
    Some((nu_new, tau_new, false))
}
