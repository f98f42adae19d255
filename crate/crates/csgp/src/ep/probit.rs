//! Per-site EP arithmetic for the probit likelihood: cavity removal, tilted
//! moment matching, and the natural-parameter site update.
//!
//! Only this module knows the likelihood; swapping in another one means
//! providing a different tilted-moment routine with the same shape.

use super::normal::{log_norm_cdf, pdf_over_cdf};

/// First two moments (and log mass) of cavity × likelihood.
#[derive(Debug, Clone, Copy)]
pub struct TiltedMoments {
    pub log_z_hat: f64,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
}

/// Remove site (ν̃ᵢ, τ̃ᵢ) from the marginal N(μᵢ, σᵢ²).
///
/// Returns `(μ_cav, σ²_cav)`, or `None` when the cavity precision is not
/// positive — the caller skips the site for this sweep.
pub fn cavity(mu_i: f64, sigma2_i: f64, nu_tilde_i: f64, tau_tilde_i: f64) -> Option<(f64, f64)> {
    debug_assert!(sigma2_i > 0.0);
    let tau_cav = 1.0 / sigma2_i - tau_tilde_i;
    if !tau_cav.is_finite() || tau_cav <= 0.0 {
        return None;
    }
    let nu_cav = mu_i / sigma2_i - nu_tilde_i;
    Some((nu_cav / tau_cav, 1.0 / tau_cav))
}

/// Moments of N(f; μ_cav, σ²_cav)·Φ(y·f) for y ∈ {−1, +1}.
pub fn probit_moments(y: f64, mu_cav: f64, sigma2_cav: f64) -> TiltedMoments {
    debug_assert!(y == 1.0 || y == -1.0);
    debug_assert!(sigma2_cav > 0.0);
    let denom = (1.0 + sigma2_cav).sqrt();
    let z = y * mu_cav / denom;
    let ratio = pdf_over_cdf(z);
    let mu_hat = mu_cav + y * sigma2_cav * ratio / denom;
    let sigma2_hat = sigma2_cav - sigma2_cav * sigma2_cav * ratio * (z + ratio) / (1.0 + sigma2_cav);
    TiltedMoments {
        log_z_hat: log_norm_cdf(z),
        mu_hat,
        sigma2_hat,
    }
}

/// Site parameters that make cavity × site match the tilted moments.
/// Returns raw `(ν̃_new, τ̃_new)`; damping and clamping are the caller's.
pub fn site_update(mu_cav: f64, sigma2_cav: f64, tilted: &TiltedMoments) -> (f64, f64) {
    let tau_new = 1.0 / tilted.sigma2_hat - 1.0 / sigma2_cav;
    let nu_new = tilted.mu_hat / tilted.sigma2_hat - mu_cav / sigma2_cav;
    (nu_new, tau_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_site_gives_marginal_back() {
        let (mu, s2) = cavity(0.7, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(mu, 0.7);
        assert_eq!(s2, 2.0);
    }

    #[test]
    fn cavity_arithmetic() {
        let (mu, s2) = cavity(0.0, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(mu, 0.0);
        assert_eq!(s2, 1.0);
    }

    #[test]
    fn invalid_cavity_detected() {
        assert!(cavity(0.0, 1.0, 0.0, 2.0).is_none());
        assert!(cavity(0.0, 1.0, 0.0, 1.0).is_none()); // zero precision
    }

    #[test]
    fn standard_case_closed_form() {
        // μ_cav=0, σ²_cav=1, y=+1: Ẑ = ½, μ̂ = φ(0)/(½·√2).
        let t = probit_moments(1.0, 0.0, 1.0);
        assert_relative_eq!(t.log_z_hat, 0.5_f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(t.mu_hat, 0.564_189_583_547_756_3, epsilon = 1e-12);
        let ratio = 0.398_942_280_401_432_7 / 0.5;
        assert_relative_eq!(t.sigma2_hat, 1.0 - 0.5 * ratio * ratio, epsilon = 1e-12);
    }

    #[test]
    fn label_mirror_symmetry() {
        for &(mu, s2) in &[(0.3, 0.8), (-1.2, 2.5), (4.0, 0.1)] {
            let plus = probit_moments(1.0, -mu, s2);
            let minus = probit_moments(-1.0, mu, s2);
            assert_relative_eq!(plus.log_z_hat, minus.log_z_hat, epsilon = 1e-14);
            assert_relative_eq!(plus.mu_hat, -minus.mu_hat, epsilon = 1e-13);
            assert_relative_eq!(plus.sigma2_hat, minus.sigma2_hat, epsilon = 1e-13);
        }
    }

    #[test]
    fn shrinking_cavity_recovers_delta_limit() {
        let t = probit_moments(1.0, 0.4, 1e-10);
        assert_relative_eq!(t.mu_hat, 0.4, epsilon = 1e-8);
        assert!(t.sigma2_hat < 1e-9);
        assert_relative_eq!(t.log_z_hat, log_norm_cdf(0.4), epsilon = 1e-8);
    }

    #[test]
    fn tilted_variance_contracts_and_stays_positive() {
        for &z_scale in &[0.0, -2.0, -8.0, -25.0] {
            let t = probit_moments(1.0, z_scale, 1.5);
            assert!(t.sigma2_hat > 0.0, "z={z_scale}");
            assert!(t.sigma2_hat <= 1.5 + 1e-12);
        }
    }

    #[test]
    fn site_update_identity_when_tilted_equals_cavity() {
        let tilted = TiltedMoments {
            log_z_hat: 0.0,
            mu_hat: 0.25,
            sigma2_hat: 0.75,
        };
        let (nu, tau) = site_update(0.25, 0.75, &tilted);
        assert_relative_eq!(nu, 0.0, epsilon = 1e-14);
        assert_relative_eq!(tau, 0.0, epsilon = 1e-14);
    }
}
