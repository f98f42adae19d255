//! The sparse EP loop.
//!
//! Per site: the marginal (μᵢ, σᵢ²) comes from one sparse solve against the
//! factor of B, the site is updated through the shared cavity/tilted/update
//! path, row i of B is rebuilt from the new τ̃ᵢ, and the factor absorbs it
//! via `ldl_row_modify` — never a refactorization unless the incremental
//! update reports an indefinite pivot. γ = K ν̃ is maintained by sparse
//! axpy and refreshed at sweep boundaries.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::marginal::{assemble_log_z, LogZParts};
use super::probit::{cavity, probit_moments, site_update};
use super::{damp_and_clamp, EpConfig, EpDiagnostics, EpState, SiteOrder, SiteParams};
use crate::sparse::{
    ldl_factorize, minimum_degree, symbolic_analyze, SolveScratch, SparseSymMatrix, SparseVector,
};
use crate::SparseError;

/// B = I + S K S on K's pattern, with S = diag(√τ̃).
pub(crate) fn assemble_b(k: &SparseSymMatrix, sqrt_tau: &[f64]) -> SparseSymMatrix {
    let mut b = k.clone();
    let n = k.n();
    for j in 0..n {
        let range = b.col_range(j);
        let rows = &k.row_indices()[range.clone()];
        let kvals = &k.values()[range.clone()];
        let sj = sqrt_tau[j];
        let mut new_vals = Vec::with_capacity(rows.len());
        for (off, &i) in rows.iter().enumerate() {
            let mut v = sqrt_tau[i] * sj * kvals[off];
            if i == j {
                v += 1.0;
            }
            new_vals.push(v);
        }
        let vals = b.values_mut();
        for (off, p) in range.enumerate() {
            vals[p] = new_vals[off];
        }
    }
    b
}

/// Run sparse EP from zero-initialized sites.
pub fn run_sparse_ep(
    k: &SparseSymMatrix,
    y: &[f64],
    cfg: &EpConfig,
) -> Result<EpState, SparseError> {
    run_sparse_ep_warm(k, y, cfg, None)
}

/// Rebuild a usable EP state from stored site parameters, factorizing B
/// from scratch. `log_z` is left NaN — recompute with [`super::log_marginal`]
/// if needed; the state is marked converged because sites are only ever
/// persisted from converged runs.
pub fn state_from_sites(
    k: &SparseSymMatrix,
    mut sites: SiteParams,
) -> Result<EpState, SparseError> {
    assert_eq!(sites.len(), k.n());
    sites.refresh_gamma(k);
    let sqrt_tau: Vec<f64> = sites.tau_tilde.iter().map(|t| t.sqrt()).collect();
    let perm = minimum_degree(k);
    let symbolic = std::sync::Arc::new(symbolic_analyze(k, &perm));
    let b = assemble_b(k, &sqrt_tau);
    let factor = ldl_factorize(&b, symbolic)?;
    Ok(EpState {
        factor,
        b_matrix: b,
        sites,
        log_z: f64::NAN,
        sweeps: 0,
        converged: true,
        delta_log_z: f64::NAN,
        diagnostics: EpDiagnostics::default(),
    })
}

/// Run sparse EP, optionally warm-started from previous site parameters
/// (γ is always recomputed from K and ν̃).
pub fn run_sparse_ep_warm(
    k: &SparseSymMatrix,
    y: &[f64],
    cfg: &EpConfig,
    warm: Option<&SiteParams>,
) -> Result<EpState, SparseError> {
    let n = k.n();
    assert_eq!(y.len(), n, "label count must match kernel dimension");
    assert!(y.iter().all(|&v| v == 1.0 || v == -1.0));
    assert!((0.0..=1.0).contains(&cfg.damping) && cfg.damping > 0.0);

    let mut sites = match warm {
        Some(w) => {
            assert_eq!(w.len(), n);
            w.clone()
        }
        None => SiteParams::zeros(n),
    };
    sites.refresh_gamma(k);
    let mut sqrt_tau: Vec<f64> = sites.tau_tilde.iter().map(|t| t.sqrt()).collect();

    // Ordering and symbolic analysis are per kernel pattern; the pattern of
    // B never changes across sweeps, so this happens exactly once.
    let perm = minimum_degree(k);
    let symbolic = std::sync::Arc::new(symbolic_analyze(k, &perm));
    let mut b = assemble_b(k, &sqrt_tau);
    let mut factor = ldl_factorize(&b, symbolic)?;

    let mut diagnostics = EpDiagnostics::default();
    let mut scratch = SolveScratch::new(n);
    let mut t_buf = vec![0.0; n];
    // w = S γ, kept current so μᵢ = γᵢ − tᵀw is one dot product.
    let mut s_gamma: Vec<f64> = (0..n).map(|i| sqrt_tau[i] * sites.gamma[i]).collect();

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
            // a = S·K[:,i], nonzeros only.
            let (rows, kvals) = k.col(i);
            let mut a_pairs = Vec::with_capacity(rows.len());
            for (off, &r) in rows.iter().enumerate() {
                let v = sqrt_tau[r] * kvals[off];
                if v != 0.0 {
                    a_pairs.push((r, v));
                }
            }
            let a = SparseVector::from_sorted(a_pairs);
            factor.solve_into(&a, &mut t_buf, &mut scratch);

            let sigma2_i = k.diag(i) - a.dot_dense(&t_buf);
            if !sigma2_i.is_finite() || sigma2_i <= 0.0 {
                diagnostics.skipped_cavities += 1;
                continue;
            }
            let mu_i = sites.gamma[i]
                - t_buf
                    .iter()
                    .zip(&s_gamma)
                    .map(|(t, w)| t * w)
                    .sum::<f64>();

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
            let d_nu = nu_new - sites.nu_tilde[i];
            let d_tau = tau_new - sites.tau_tilde[i];
            if d_nu == 0.0 && d_tau == 0.0 {
                continue;
            }
            sites.nu_tilde[i] = nu_new;
            sites.tau_tilde[i] = tau_new;
            sqrt_tau[i] = tau_new.sqrt();

            if d_tau != 0.0 {
                // New column of B: d_r = √τ̃_r √τ̃ᵢ K_ri + δ_ri, every frozen
                // slot, zeros included so the stored B stays slot-aligned.
                let si = sqrt_tau[i];
                let mut col_vals = Vec::with_capacity(rows.len());
                let mut row_pairs = Vec::with_capacity(rows.len());
                for (off, &r) in rows.iter().enumerate() {
                    let mut v = sqrt_tau[r] * si * kvals[off];
                    if r == i {
                        v += 1.0;
                    }
                    col_vals.push(v);
                    if v != 0.0 || r == i {
                        row_pairs.push((r, v));
                    }
                }
                b.set_col_sym(i, &col_vals);
                let new_row = SparseVector::from_sorted(row_pairs);
                if let Err(err) = factor.ldl_row_modify(&new_row, i) {
                    log::debug!(
                        target: "csgp::ep",
                        "sweep={sweep} site={i} row_modify_failed err={err} refactorizing"
                    );
                    diagnostics.refactorizations += 1;
                    factor.refactorize(&b)?;
                }
            }

            // γ += K[:,i]·Δν̃ᵢ and the matching S-scaled copy.
            if d_nu != 0.0 {
                for (off, &r) in rows.iter().enumerate() {
                    sites.gamma[r] += kvals[off] * d_nu;
                    s_gamma[r] = sqrt_tau[r] * sites.gamma[r];
                }
            }
            s_gamma[i] = sqrt_tau[i] * sites.gamma[i];
        }

        // Sweep boundary: record γ drift, refresh, evaluate log Z_EP.
        diagnostics.max_gamma_residual = diagnostics
            .max_gamma_residual
            .max(sites.gamma_residual(k));
        sites.refresh_gamma(k);
        for i in 0..n {
            s_gamma[i] = sqrt_tau[i] * sites.gamma[i];
        }

        let new_log_z = sparse_log_z(k, &factor, &sites, y, &sqrt_tau, &s_gamma, &mut scratch);
        delta = (new_log_z - log_z).abs();
        log_z = new_log_z;
        diagnostics.sweep_log_z.push(log_z);
        log::debug!(
            target: "csgp::ep",
            "sweep={sweep} logz={log_z:.8e} delta={delta:.3e} skips={} clamps={} refactor={}",
            diagnostics.skipped_cavities,
            diagnostics.clamped_sites,
            diagnostics.refactorizations
        );
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }

    if !converged {
        log::warn!(
            target: "csgp::ep",
            "ep did not converge after {sweeps} sweeps (delta={delta:.3e}, tol={})",
            cfg.tol
        );
    }
    Ok(EpState {
        factor,
        b_matrix: b,
        sites,
        log_z,
        sweeps,
        converged,
        delta_log_z: delta,
        diagnostics,
    })
}

/// log Z_EP from the current factor and sites: marginals are recomputed
/// from fresh per-site solves, which keeps the value exact at any state.
pub(crate) fn sparse_log_z(
    k: &SparseSymMatrix,
    factor: &crate::sparse::LdlFactor,
    sites: &SiteParams,
    y: &[f64],
    sqrt_tau: &[f64],
    s_gamma: &[f64],
    scratch: &mut SolveScratch,
) -> f64 {
    let n = k.n();
    let mut mu = vec![0.0; n];
    let mut sigma2 = vec![0.0; n];
    let mut t_buf = vec![0.0; n];
    for i in 0..n {
        let (rows, kvals) = k.col(i);
        let mut a_pairs = Vec::with_capacity(rows.len());
        for (off, &r) in rows.iter().enumerate() {
            let v = sqrt_tau[r] * kvals[off];
            if v != 0.0 {
                a_pairs.push((r, v));
            }
        }
        let a = SparseVector::from_sorted(a_pairs);
        factor.solve_into(&a, &mut t_buf, scratch);
        sigma2[i] = k.diag(i) - a.dot_dense(&t_buf);
        mu[i] = sites.gamma[i]
            - t_buf
                .iter()
                .zip(s_gamma)
                .map(|(t, w)| t * w)
                .sum::<f64>();
    }

    let sg = SparseVector::from_dense(s_gamma);
    let v = factor.solve(&sg);
    let quad_s_gamma = sg.dot_dense(&v);
    let nu_dot_gamma = sites
        .nu_tilde
        .iter()
        .zip(&sites.gamma)
        .map(|(a, b)| a * b)
        .sum::<f64>();

    assemble_log_z(
        y,
        &mu,
        &sigma2,
        &sites.nu_tilde,
        &sites.tau_tilde,
        &LogZParts {
            logdet_b: factor.logdet(),
            quad_s_gamma,
            nu_dot_gamma,
        },
    )
}
