//! EP log marginal likelihood and its hyperparameter gradient.
//!
//! Everything is expressed through the factor of B = I + S K S so that
//! empty sites (τ̃ᵢ = 0) contribute their limiting terms instead of
//! dividing by zero:
//!
//! ```text
//! log Z_EP = −½ log|B| + Σᵢ [ log Φ(zᵢ) + ½ log(1 + τ̃ᵢ σ²_cav,i) + T3ᵢ ]
//!            − ½ ( Σ_{τ̃ᵢ>0} ν̃ᵢ²/τ̃ᵢ − ν̃ᵀγ + (Sγ)ᵀ B⁻¹ (Sγ) )
//! T3ᵢ = (μ_cav,i τ̃ᵢ − ν̃ᵢ)² / (2 τ̃ᵢ (1 + τ̃ᵢ σ²_cav,i))   for τ̃ᵢ > 0, else 0
//! ```
//!
//! which is the standard EP evidence −½log|K+Σ̃| − ½μ̃ᵀ(K+Σ̃)⁻¹μ̃ + cavity
//! terms, regrouped so every piece is finite at τ̃ᵢ = 0.
//!
//! The gradient at a fixed point needs b = (K+Σ̃)⁻¹μ̃ = ν̃ − S B⁻¹ S γ and
//! the trace of (K+Σ̃)⁻¹∂K, taken entry-by-entry over K's pattern against
//! the selective inverse Z^sp = S B⁻¹ S — inverse entries outside the
//! pattern multiply structural zeros of ∂K and never matter.

use super::normal::log_norm_cdf;
use super::EpState;
use crate::error::EpError;
use crate::kernel::KernelMatrixBundle;
use crate::sparse::{takahashi_sparse_inverse, SolveScratch, SparseSymMatrix, SparseVector};

pub(crate) struct LogZParts {
    pub logdet_b: f64,
    /// (Sγ)ᵀ B⁻¹ (Sγ)
    pub quad_s_gamma: f64,
    /// ν̃ᵀ γ
    pub nu_dot_gamma: f64,
}

/// Assemble log Z_EP from per-site marginals and the matrix parts. Shared
/// verbatim by the sparse and dense engines so any disagreement between
/// them is a linear-algebra bug, not a formula drift.
///
/// Returns NaN when any site has a non-positive cavity precision: the EP
/// evidence is undefined there, and substituting a clamped value would
/// fabricate arbitrarily large `½log(1+τ̃σ²_cav)` terms that a
/// hyperparameter search then chases. A NaN never satisfies a convergence
/// test and marks the evaluation as unusable.
pub(crate) fn assemble_log_z(
    y: &[f64],
    mu: &[f64],
    sigma2: &[f64],
    nu_tilde: &[f64],
    tau_tilde: &[f64],
    parts: &LogZParts,
) -> f64 {
    let n = y.len();
    let mut site_terms = 0.0;
    let mut nu2_over_tau = 0.0;
    for i in 0..n {
        let tau = tau_tilde[i];
        let nu = nu_tilde[i];
        let tau_cav = 1.0 / sigma2[i] - tau;
        if !tau_cav.is_finite() || tau_cav <= 0.0 {
            return f64::NAN;
        }
        let s2_cav = 1.0 / tau_cav;
        let mu_cav = (mu[i] / sigma2[i] - nu) * s2_cav;

        let z = y[i] * mu_cav / (1.0 + s2_cav).sqrt();
        site_terms += log_norm_cdf(z);
        let one_plus = 1.0 + tau * s2_cav;
        site_terms += 0.5 * one_plus.ln();
        if tau > 0.0 {
            let t = mu_cav * tau - nu;
            site_terms += t * t / (2.0 * tau * one_plus);
            nu2_over_tau += nu * nu / tau;
        }
    }
    -0.5 * parts.logdet_b + site_terms
        - 0.5 * (nu2_over_tau - parts.nu_dot_gamma + parts.quad_s_gamma)
}

/// log Z_EP of a sparse EP state, recomputed from the factor (valid for
/// converged and mid-run states alike).
pub fn log_marginal(state: &EpState, k: &SparseSymMatrix, y: &[f64]) -> f64 {
    let n = k.n();
    assert_eq!(state.n(), n);
    let mut sites = state.sites.clone();
    sites.refresh_gamma(k);
    let sqrt_tau: Vec<f64> = sites.tau_tilde.iter().map(|t| t.sqrt()).collect();
    let s_gamma: Vec<f64> = (0..n).map(|i| sqrt_tau[i] * sites.gamma[i]).collect();
    let mut scratch = SolveScratch::new(n);
    super::sparse_run::sparse_log_z(k, &state.factor, &sites, y, &sqrt_tau, &s_gamma, &mut scratch)
}

/// Gradient of log Z_EP with respect to the log-hyperparameters at an EP
/// fixed point. Refuses non-converged states: away from the fixed point the
/// site parameters have nonzero θ-sensitivity and the formula is wrong.
pub fn ep_gradient(state: &EpState, bundle: &KernelMatrixBundle) -> Result<Vec<f64>, EpError> {
    if !state.converged {
        return Err(EpError::NotConverged {
            sweeps: state.sweeps,
        });
    }
    let k = bundle.k();
    let n = k.n();
    assert_eq!(state.n(), n);

    let mut gamma = vec![0.0; n];
    k.matvec(&state.sites.nu_tilde, &mut gamma);
    let sqrt_tau: Vec<f64> = state.sites.tau_tilde.iter().map(|t| t.sqrt()).collect();
    let s_gamma: Vec<f64> = (0..n).map(|i| sqrt_tau[i] * gamma[i]).collect();

    // b = ν̃ − S B⁻¹ (S γ) = (K + Σ̃)⁻¹ μ̃, finite for empty sites.
    let v = state.factor.solve(&SparseVector::from_dense(&s_gamma));
    let b: Vec<f64> = (0..n)
        .map(|i| state.sites.nu_tilde[i] - sqrt_tau[i] * v[i])
        .collect();

    // Selective inverse of B on the fill pattern, scaled to S B⁻¹ S.
    let z = takahashi_sparse_inverse(&state.factor);

    let mut grad = vec![0.0; bundle.n_params()];
    for (p, g) in grad.iter_mut().enumerate() {
        let dk = bundle.grad_values(p);
        let mut quad = 0.0;
        let mut trace = 0.0;
        for j in 0..n {
            let range = k.col_range(j);
            let rows = &k.row_indices()[range.clone()];
            let (z_rows, z_vals) = z.col(j);
            let mut zp = 0usize;
            let bj = b[j];
            let sj = sqrt_tau[j];
            for (off, slot) in range.enumerate() {
                let i = rows[off];
                let dkv = dk[slot];
                quad += b[i] * dkv * bj;
                // K's pattern is a subset of the fill pattern; advance the
                // merge pointer to the matching inverse entry.
                while z_rows[zp] < i {
                    zp += 1;
                }
                debug_assert_eq!(z_rows[zp], i);
                trace += sqrt_tau[i] * z_vals[zp] * sj * dkv;
            }
        }
        *g = 0.5 * quad - 0.5 * trace;
    }
    Ok(grad)
}
