//! Predictive distribution at new inputs.

use super::normal::norm_cdf;
use super::EpState;
use crate::data::InputMatrix;
use crate::kernel::{cross_kernel, Hyperparams};
use crate::sparse::{SolveScratch, SparseSymMatrix, SparseVector};

/// Latent mean/variance and class-1 probability for one test point.
#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    pub latent_mean: f64,
    pub latent_var: f64,
    pub prob_positive: f64,
}

/// Predict at `x_star` from a converged EP state.
///
/// Per point: μ* = k*ᵀ(ν̃ − S B⁻¹ S γ) and σ*² = k** − (Sk*)ᵀ B⁻¹ (Sk*),
/// both through the sparse factor; p(y*=1) = Φ(μ*/√(1+σ*²)).
pub fn predict(
    state: &EpState,
    k: &SparseSymMatrix,
    x_train: &InputMatrix,
    x_star: &InputMatrix,
    hyp: &Hyperparams,
) -> Vec<Prediction> {
    let n = k.n();
    assert_eq!(state.n(), n);
    assert_eq!(x_train.n(), n);

    let mut gamma = vec![0.0; n];
    k.matvec(&state.sites.nu_tilde, &mut gamma);
    let sqrt_tau: Vec<f64> = state.sites.tau_tilde.iter().map(|t| t.sqrt()).collect();
    let s_gamma: Vec<f64> = (0..n).map(|i| sqrt_tau[i] * gamma[i]).collect();
    let v = state.factor.solve(&SparseVector::from_dense(&s_gamma));
    // b = ν̃ − S B⁻¹ S γ; then μ* is a sparse dot with each cross column.
    let b: Vec<f64> = (0..n)
        .map(|i| state.sites.nu_tilde[i] - sqrt_tau[i] * v[i])
        .collect();

    let k_star_star = hyp.sigma2;
    let columns = cross_kernel(x_train, x_star, hyp);
    let mut scratch = SolveScratch::new(n);
    let mut t_buf = vec![0.0; n];

    let mut out = Vec::with_capacity(columns.len());
    for col in &columns {
        let latent_mean = col.dot_dense(&b);
        let u_pairs: Vec<(usize, f64)> = col
            .iter()
            .filter_map(|(i, kv)| {
                let w = sqrt_tau[i] * kv;
                (w != 0.0).then_some((i, w))
            })
            .collect();
        let u = SparseVector::from_sorted(u_pairs);
        state.factor.solve_into(&u, &mut t_buf, &mut scratch);
        let latent_var = (k_star_star - u.dot_dense(&t_buf)).max(0.0);
        let prob_positive = norm_cdf(latent_mean / (1.0 + latent_var).sqrt());
        out.push(Prediction {
            latent_mean,
            latent_var,
            prob_positive,
        });
    }
    out
}
