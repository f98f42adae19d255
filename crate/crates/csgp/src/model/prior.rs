//! Half-Student-t hyperparameter prior.
//!
//! Weakly informative on positive scales: most mass at small values, tails
//! heavy enough for the data to pull the posterior anywhere. Favouring
//! small length-scales doubles as a sparsity prior for the compactly
//! supported kernels — smaller l means a smaller support radius.

/// Half-Student-t density on (0, ∞) with `df` degrees of freedom and
/// scale `s`: p(θ) ∝ (1 + θ²/(df·s²))^{−(df+1)/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfStudentTPrior {
    pub df: f64,
    pub scale: f64,
}

impl HalfStudentTPrior {
    pub fn new(df: f64, scale: f64) -> Self {
        assert!(df > 0.0 && scale > 0.0);
        Self { df, scale }
    }
}

impl Default for HalfStudentTPrior {
    fn default() -> Self {
        Self::new(4.0, 6.0)
    }
}

/// log p(θ) up to an additive constant, and d log p / d log θ.
pub fn log_prior_and_grad(theta: f64, prior: &HalfStudentTPrior) -> (f64, f64) {
    assert!(theta > 0.0);
    let nss = prior.df * prior.scale * prior.scale;
    let t2 = theta * theta;
    let logp = -0.5 * (prior.df + 1.0) * (1.0 + t2 / nss).ln();
    let grad = -(prior.df + 1.0) * t2 / (nss + t2);
    (logp, grad)
}
