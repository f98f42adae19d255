//! Reference EP engine on dense matrices.
//!
//! Maintains the full posterior covariance Σ with the classical rank-one
//! update per site,
//!
//! ```text
//! Σ ← Σ − δᵢ sᵢ sᵢᵀ,   δᵢ = Δτ̃ᵢ / (1 + Δτ̃ᵢ Σᵢᵢ),   sᵢ = Σ[:,i]
//! ```
//!
//! and rebuilds Σ from a Cholesky factorization of B = I + S K S at every
//! sweep boundary to stop roundoff drift. Site math (cavity, tilted
//! moments, damping, clamping) is byte-for-byte shared with the sparse
//! engine, so the two can only diverge through linear algebra.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::marginal::{assemble_log_z, LogZParts};
use super::probit::{cavity, probit_moments, site_update};
use super::{damp_and_clamp, EpConfig, EpDiagnostics, SiteOrder, SiteParams};

/// Outcome of a dense EP run: sites, posterior marginals, evidence.
#[derive(Debug, Clone)]
pub struct DenseEpState {
    pub sites: SiteParams,
    pub mu: Vec<f64>,
    pub sigma_diag: Vec<f64>,
    pub log_z: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub delta_log_z: f64,
    pub diagnostics: EpDiagnostics,
}

/// Run the dense reference EP from zero-initialized sites.
pub fn run_dense_ep(k: &DMatrix<f64>, y: &[f64], cfg: &EpConfig) -> DenseEpState {
    let n = k.nrows();
    assert_eq!(k.ncols(), n);
    assert_eq!(y.len(), n);
    assert!(y.iter().all(|&v| v == 1.0 || v == -1.0));

    let mut sites = SiteParams::zeros(n);
    let mut sigma = k.clone();
    let mut mu = DVector::<f64>::zeros(n);
    let mut diagnostics = EpDiagnostics::default();

    let mut order: Vec<usize> = (0..n).collect();
    let mut log_z = f64::NEG_INFINITY;
    let mut delta = f64::INFINITY;
    let mut converged = false;
    let mut sweeps = 0;

    for sweep in 1..=cfg.max_sweeps {
        sweeps = sweep;
        if cfg.site_order == SiteOrder::Random {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(sweep as u64));
            order.shuffle(&mut rng);
        }

        for &i in &order {
            let sigma2_i = sigma[(i, i)];
            if !sigma2_i.is_finite() || sigma2_i <= 0.0 {
                diagnostics.skipped_cavities += 1;
                continue;
            }
            let mu_i = mu[i];
            let Some((mu_cav, s2_cav)) =
                cavity(mu_i, sigma2_i, sites.nu_tilde[i], sites.tau_tilde[i])
            else {
                diagnostics.skipped_cavities += 1;
                continue;
            };
            let tilted = probit_moments(y[i], mu_cav, s2_cav);
            let (nu_raw, tau_raw) = site_update(mu_cav, s2_cav, &tilted);
            let Some((nu_new, tau_new, clamped)) = damp_and_clamp(
                sites.nu_tilde[i],
                sites.tau_tilde[i],
                nu_raw,
                tau_raw,
                cfg.damping,
                cfg.clamp_negative_tau,
            ) else {
                diagnostics.skipped_cavities += 1;
                continue;
            };
            if clamped {
                diagnostics.clamped_sites += 1;
            }
            let d_tau = tau_new - sites.tau_tilde[i];
            let denom = 1.0 + d_tau * sigma2_i;
            if denom <= 1e-12 {
                diagnostics.skipped_cavities += 1;
                continue;
            }
            sites.nu_tilde[i] = nu_new;
            sites.tau_tilde[i] = tau_new;

            let delta_i = d_tau / denom;
            let s_col = sigma.column(i).clone_owned();
            sigma.ger(-delta_i, &s_col, &s_col, 1.0);
            mu = &sigma * DVector::from_column_slice(&sites.nu_tilde);
        }

        // Sweep boundary: rebuild Σ and μ from a fresh Cholesky of B.
        let sqrt_tau: Vec<f64> = sites.tau_tilde.iter().map(|t| t.sqrt()).collect();
        let mut b = DMatrix::<f64>::identity(n, n);
        for r in 0..n {
            for c in 0..n {
                b[(r, c)] += sqrt_tau[r] * sqrt_tau[c] * k[(r, c)];
            }
        }
        let chol = b
            .clone()
            .cholesky()
            .expect("B = I + SKS is SPD for PSD K and nonnegative tau");
        // SK = diag(√τ̃)·K row-scaled.
        let mut sk = k.clone();
        for r in 0..n {
            for c in 0..n {
                sk[(r, c)] *= sqrt_tau[r];
            }
        }
        let t = chol.solve(&sk);
        sigma = k - sk.transpose() * &t;
        let nu_vec = DVector::from_column_slice(&sites.nu_tilde);
        mu = &sigma * &nu_vec;
        sites.refresh_gamma_dense(k);

        // Evidence with the shared assembly.
        let gamma = DVector::from_column_slice(&sites.gamma);
        let s_gamma = DVector::from_fn(n, |i, _| sqrt_tau[i] * gamma[i]);
        let quad = s_gamma.dot(&chol.solve(&s_gamma));
        let logdet_b = 2.0 * chol.l_dirty().diagonal().map(f64::ln).sum();
        let mu_slice: Vec<f64> = mu.iter().copied().collect();
        let sigma_diag: Vec<f64> = (0..n).map(|i| sigma[(i, i)]).collect();
        let new_log_z = assemble_log_z(
            y,
            &mu_slice,
            &sigma_diag,
            &sites.nu_tilde,
            &sites.tau_tilde,
            &LogZParts {
                logdet_b,
                quad_s_gamma: quad,
                nu_dot_gamma: nu_vec.dot(&gamma),
            },
        );
        delta = (new_log_z - log_z).abs();
        log_z = new_log_z;
        diagnostics.sweep_log_z.push(log_z);
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }

    let sigma_diag = (0..n).map(|i| sigma[(i, i)]).collect();
    DenseEpState {
        sites,
        mu: mu.iter().copied().collect(),
        sigma_diag,
        log_z,
        sweeps,
        converged,
        delta_log_z: delta,
        diagnostics,
    }
}

impl SiteParams {
    /// γ = K ν̃ against a dense kernel matrix.
    pub(crate) fn refresh_gamma_dense(&mut self, k: &DMatrix<f64>) {
        let n = self.len();
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += k[(i, j)] * self.nu_tilde[j];
            }
            self.gamma[i] = acc;
        }
    }
}
