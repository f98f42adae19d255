//! Covariance functions: squared exponential and the compactly supported
//! piecewise-polynomial family.
//!
//! The compactly supported kernels are exactly zero once the length-scaled
//! distance reaches 1, which is what makes the covariance matrix sparse. The
//! polynomial degree grows with the input dimension through the exponent
//! `j = ⌊d/2⌋ + q + 1`, keeping each member positive definite up to that
//! dimension; `q` is the order of mean-square differentiability.
//!
//! Hyperparameters are optimized in log space throughout, so all gradients
//! here are taken with respect to `log σ²` and `log l_k`.

mod build;

pub use build::{build_kernel_matrix, build_kernel_values, cross_kernel, KernelMatrixBundle};

/// Kernel family selector. The `ppq` names follow the usual Wendland-style
/// numbering by smoothness order q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Se,
    Pp0,
    Pp1,
    Pp2,
    Pp3,
}

impl KernelKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "se" => Some(Self::Se),
            "pp0" => Some(Self::Pp0),
            "pp1" => Some(Self::Pp1),
            "pp2" => Some(Self::Pp2),
            "pp3" => Some(Self::Pp3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Se => "se",
            Self::Pp0 => "pp0",
            Self::Pp1 => "pp1",
            Self::Pp2 => "pp2",
            Self::Pp3 => "pp3",
        }
    }

    /// Smoothness order q for the piecewise-polynomial members.
    pub fn smoothness_order(self) -> Option<u32> {
        match self {
            Self::Se => None,
            Self::Pp0 => Some(0),
            Self::Pp1 => Some(1),
            Self::Pp2 => Some(2),
            Self::Pp3 => Some(3),
        }
    }

    /// Whether the kernel vanishes for r ≥ 1.
    pub fn compactly_supported(self) -> bool {
        !matches!(self, Self::Se)
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel kind plus magnitude and per-dimension length-scales.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub kind: KernelKind,
    pub sigma2: f64,
    pub length_scales: Vec<f64>,
}

impl Hyperparams {
    pub fn new(kind: KernelKind, sigma2: f64, length_scales: Vec<f64>) -> Self {
        assert!(sigma2 > 0.0, "magnitude must be positive");
        assert!(!length_scales.is_empty(), "need at least one length-scale");
        assert!(
            length_scales.iter().all(|&l| l > 0.0),
            "length-scales must be positive"
        );
        Self {
            kind,
            sigma2,
            length_scales,
        }
    }

    /// Isotropic constructor: one shared length-scale for `d` dimensions.
    pub fn isotropic(kind: KernelKind, sigma2: f64, l: f64, d: usize) -> Self {
        Self::new(kind, sigma2, vec![l; d])
    }

    pub fn input_dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn n_params(&self) -> usize {
        1 + self.length_scales.len()
    }

    /// Truncation exponent for the compactly supported members.
    pub fn exponent_j(&self) -> u32 {
        let q = self
            .kind
            .smoothness_order()
            .expect("exponent j is defined for pp kernels only");
        smoothness_exponent(self.input_dim(), q)
    }

    /// Parameter vector `[log σ², log l₁, …, log l_d]`.
    pub fn to_log_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.push(self.sigma2.ln());
        v.extend(self.length_scales.iter().map(|l| l.ln()));
        v
    }

    pub fn from_log_params(kind: KernelKind, log_params: &[f64]) -> Self {
        assert!(log_params.len() >= 2, "need log σ² and at least one log l");
        Self::new(
            kind,
            log_params[0].exp(),
            log_params[1..].iter().map(|v| v.exp()).collect(),
        )
    }
}

/// Length-scaled Euclidean distance `r = √(Σ_k (x_{i,k} − x_{j,k})²/l_k²)`.
pub fn scaled_distance(xi: &[f64], xj: &[f64], length_scales: &[f64]) -> f64 {
    assert_eq!(xi.len(), xj.len(), "input dimensions disagree");
    assert_eq!(xi.len(), length_scales.len(), "length-scale count disagrees");
    let mut s = 0.0;
    for k in 0..xi.len() {
        let t = (xi[k] - xj[k]) / length_scales[k];
        s += t * t;
    }
    s.sqrt()
}

/// `j = ⌊d/2⌋ + q + 1`: the smallest truncation power keeping the order-q
/// piecewise polynomial positive definite in dimension `d`.
pub fn smoothness_exponent(d: usize, q: u32) -> u32 {
    assert!(d >= 1);
    assert!(q <= 3, "only q in 0..=3 is defined");
    (d / 2) as u32 + q + 1
}

/// Kernel value at length-scaled distance `r`.
///
/// Exactly σ² at r = 0 for every kind, and exactly 0 for r ≥ 1 for the
/// compactly supported kinds.
pub fn kernel_value(hyp: &Hyperparams, r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    if r == 0.0 {
        return hyp.sigma2;
    }
    let s2 = hyp.sigma2;
    match hyp.kind {
        KernelKind::Se => s2 * (-r * r).exp(),
        _ => {
            if r >= 1.0 {
                return 0.0;
            }
            let j = hyp.exponent_j() as i32;
            let jf = j as f64;
            let omr = 1.0 - r;
            match hyp.kind {
                KernelKind::Pp0 => s2 * omr.powi(j),
                KernelKind::Pp1 => s2 * omr.powi(j + 1) * ((jf + 1.0) * r + 1.0),
                KernelKind::Pp2 => {
                    let poly = (jf * jf + 4.0 * jf + 3.0) * r * r + (3.0 * jf + 6.0) * r + 3.0;
                    s2 / 3.0 * omr.powi(j + 2) * poly
                }
                KernelKind::Pp3 => {
                    let poly = (jf * jf * jf + 9.0 * jf * jf + 23.0 * jf + 15.0) * r * r * r
                        + (6.0 * jf * jf + 36.0 * jf + 45.0) * r * r
                        + (15.0 * jf + 45.0) * r
                        + 15.0;
                    s2 / 15.0 * omr.powi(j + 3) * poly
                }
                KernelKind::Se => unreachable!(),
            }
        }
    }
}

/// dκ/dr. Zero for the compactly supported kinds at r ≥ 1.
pub fn kernel_r_derivative(hyp: &Hyperparams, r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    let s2 = hyp.sigma2;
    match hyp.kind {
        KernelKind::Se => -2.0 * r * s2 * (-r * r).exp(),
        _ => {
            if r >= 1.0 {
                return 0.0;
            }
            let j = hyp.exponent_j() as i32;
            let jf = j as f64;
            let omr = 1.0 - r;
            match hyp.kind {
                KernelKind::Pp0 => -jf * s2 * omr.powi(j - 1),
                KernelKind::Pp1 => -s2 * (jf + 1.0) * (jf + 2.0) * r * omr.powi(j),
                KernelKind::Pp2 => {
                    -s2 / 3.0
                        * (jf + 3.0)
                        * (jf + 4.0)
                        * r
                        * omr.powi(j + 1)
                        * (1.0 + (jf + 1.0) * r)
                }
                KernelKind::Pp3 => {
                    let poly = 3.0 + 3.0 * (jf + 2.0) * r + (jf + 1.0) * (jf + 3.0) * r * r;
                    -s2 / 15.0 * (jf + 5.0) * (jf + 6.0) * r * omr.powi(j + 2) * poly
                }
                KernelKind::Se => unreachable!(),
            }
        }
    }
}

/// Kernel value and its gradient in log-hyperparameter space at a pair of
/// inputs. `grad_out` receives `[∂/∂log σ², ∂/∂log l₁, …]` and must have
/// `hyp.n_params()` entries; the value is returned.
pub fn kernel_gradients_into(
    hyp: &Hyperparams,
    xi: &[f64],
    xj: &[f64],
    grad_out: &mut [f64],
) -> f64 {
    assert_eq!(grad_out.len(), hyp.n_params());
    let r = scaled_distance(xi, xj, &hyp.length_scales);
    let value = kernel_value(hyp, r);
    grad_out[0] = value; // κ ∝ σ², so ∂κ/∂log σ² = κ
    if r == 0.0 || (hyp.kind.compactly_supported() && r >= 1.0) {
        for g in grad_out[1..].iter_mut() {
            *g = 0.0;
        }
        return value;
    }
    let dk_dr = kernel_r_derivative(hyp, r);
    for (k, g) in grad_out[1..].iter_mut().enumerate() {
        let delta = xi[k] - xj[k];
        let lk = hyp.length_scales[k];
        // ∂r/∂log l_k = −Δ²/(l_k² r)
        *g = dk_dr * (-delta * delta / (lk * lk * r));
    }
    value
}

/// Allocating variant of [`kernel_gradients_into`].
pub fn kernel_value_gradients(hyp: &Hyperparams, xi: &[f64], xj: &[f64]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; hyp.n_params()];
    let value = kernel_gradients_into(hyp, xi, xj, &mut grad);
    (value, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ALL_KINDS: [KernelKind; 5] = [
        KernelKind::Se,
        KernelKind::Pp0,
        KernelKind::Pp1,
        KernelKind::Pp2,
        KernelKind::Pp3,
    ];

    #[test]
    fn scaled_distance_cases() {
        assert_eq!(scaled_distance(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0]), 0.0);
        assert_eq!(scaled_distance(&[0.0], &[3.0], &[3.0]), 1.0);
        assert_relative_eq!(
            scaled_distance(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 2.0]),
            1.25_f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn smoothness_exponent_formula() {
        assert_eq!(smoothness_exponent(2, 3), 5);
        assert_eq!(smoothness_exponent(1, 0), 1);
        assert_eq!(smoothness_exponent(10, 2), 8);
    }

    #[test]
    fn value_at_origin_is_exactly_sigma2() {
        for kind in ALL_KINDS {
            for &s2 in &[0.1, 1.0, 3.7] {
                let hyp = Hyperparams::isotropic(kind, s2, 2.0, 3);
                assert_eq!(kernel_value(&hyp, 0.0), s2, "{kind} at r=0");
            }
        }
    }

    #[test]
    fn compact_support_is_exact() {
        for kind in ALL_KINDS.iter().filter(|k| k.compactly_supported()) {
            let hyp = Hyperparams::isotropic(*kind, 2.0, 1.0, 2);
            assert_eq!(kernel_value(&hyp, 1.0), 0.0);
            assert_eq!(kernel_value(&hyp, 1.5), 0.0);
            assert_eq!(kernel_value(&hyp, 100.0), 0.0);
        }
        let se = Hyperparams::isotropic(KernelKind::Se, 2.0, 1.0, 2);
        assert!(kernel_value(&se, 1.5) > 0.0);
    }

    #[test]
    fn pp1_hand_value() {
        // d=2 gives j=3; (1-r)⁴·(4r+1) at r=0.5 is 0.0625·3.
        let hyp = Hyperparams::isotropic(KernelKind::Pp1, 1.0, 1.0, 2);
        assert_eq!(hyp.exponent_j(), 3);
        assert_relative_eq!(kernel_value(&hyp, 0.5), 0.1875, epsilon = 1e-15);
    }

    #[test]
    fn values_nonincreasing_in_r() {
        for kind in ALL_KINDS {
            let hyp = Hyperparams::isotropic(kind, 1.3, 1.0, 3);
            let mut last = kernel_value(&hyp, 0.0);
            for step in 1..=200 {
                let r = step as f64 * 0.005;
                let v = kernel_value(&hyp, r);
                assert!(
                    v <= last + 1e-15,
                    "{kind} increases at r={r}: {v} > {last}"
                );
                assert!(kernel_r_derivative(&hyp, r) <= 0.0);
                last = v;
            }
        }
    }

    #[test]
    fn pp2_pp3_continuous_at_cutoff() {
        for kind in [KernelKind::Pp2, KernelKind::Pp3] {
            let hyp = Hyperparams::isotropic(kind, 1.0, 1.0, 2);
            let eps = 1e-7;
            assert!(kernel_value(&hyp, 1.0 - eps).abs() < 1e-12);
            assert!(kernel_r_derivative(&hyp, 1.0 - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn values_nonincreasing_in_dimension() {
        // Fixed r in (0,1): raising d raises j and lowers the value.
        for kind in ALL_KINDS.iter().filter(|k| k.compactly_supported()) {
            for &r in &[0.2, 0.5, 0.8] {
                let mut last = f64::INFINITY;
                for d in 1..=10 {
                    let hyp = Hyperparams::isotropic(*kind, 1.0, 1.0, d);
                    let v = kernel_value(&hyp, r);
                    assert!(v <= last + 1e-15, "{kind} d={d} r={r}");
                    last = v;
                }
            }
        }
    }

    #[test]
    fn r_derivative_matches_finite_differences() {
        for kind in ALL_KINDS {
            let hyp = Hyperparams::isotropic(kind, 1.7, 1.0, 4);
            for &r in &[0.05, 0.3, 0.62, 0.9] {
                let h = 1e-6;
                let fd = (kernel_value(&hyp, r + h) - kernel_value(&hyp, r - h)) / (2.0 * h);
                let an = kernel_r_derivative(&hyp, r);
                assert_relative_eq!(an, fd, max_relative = 1e-6, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn log_space_gradients_match_finite_differences() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for kind in ALL_KINDS {
            for _ in 0..40 {
                let d = rng.random_range(1..=4);
                let hyp = Hyperparams::new(
                    kind,
                    rng.random_range(0.3..3.0),
                    (0..d).map(|_| rng.random_range(0.5..2.5)).collect(),
                );
                let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut xj: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                // Keep clear of the support boundary where the PP kernels
                // have a kink the finite difference would straddle.
                let r = scaled_distance(&xi, &xj, &hyp.length_scales);
                if !(0.02..0.95).contains(&r) {
                    xj = xi.iter().map(|v| v + 0.1).collect();
                }

                let (_, grad) = kernel_value_gradients(&hyp, &xi, &xj);
                let logp = hyp.to_log_params();
                for p in 0..hyp.n_params() {
                    let h = 1e-5;
                    let mut plus = logp.clone();
                    plus[p] += h;
                    let mut minus = logp.clone();
                    minus[p] -= h;
                    let vp = kernel_value(
                        &Hyperparams::from_log_params(kind, &plus),
                        scaled_distance(
                            &xi,
                            &xj,
                            &Hyperparams::from_log_params(kind, &plus).length_scales,
                        ),
                    );
                    let vm = kernel_value(
                        &Hyperparams::from_log_params(kind, &minus),
                        scaled_distance(
                            &xi,
                            &xj,
                            &Hyperparams::from_log_params(kind, &minus).length_scales,
                        ),
                    );
                    let fd = (vp - vm) / (2.0 * h);
                    assert_relative_eq!(grad[p], fd, max_relative = 1e-5, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn gradients_vanish_where_specified() {
        for kind in ALL_KINDS {
            let hyp = Hyperparams::isotropic(kind, 1.5, 1.0, 2);
            let x = [0.3, -0.2];
            let (v, g) = kernel_value_gradients(&hyp, &x, &x);
            assert_eq!(v, 1.5);
            assert_eq!(g[0], 1.5);
            assert_eq!(&g[1..], &[0.0, 0.0]);

            if kind.compactly_supported() {
                let far = [5.0, 5.0];
                let (v, g) = kernel_value_gradients(&hyp, &x, &far);
                assert_eq!(v, 0.0);
                assert!(g.iter().all(|&t| t == 0.0));
            }
        }
    }
}
