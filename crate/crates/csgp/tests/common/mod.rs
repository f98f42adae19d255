//! Shared oracles for integration tests. Everything here is deliberately
//! independent of the library's own numerics: plain adaptive Simpson
//! quadrature and dense nalgebra linear algebra.

#![allow(dead_code)]

use csgp::{Dataset, InputMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Adaptive Simpson integration of `f` on [a, b].
///
/// Subdivision is forced for the first levels regardless of the error
/// estimate: peaked integrands can look converged to the three initial
/// sample points long before the quadrature has seen the peak.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
        forced: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || (forced == 0 && delta.abs() <= 15.0 * tol) {
            left + right + delta / 15.0
        } else {
            let fnext = forced.saturating_sub(1);
            rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1, fnext)
                + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1, fnext)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 48, 12)
}

pub fn std_norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn std_norm_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Moments of the exact single-site posterior ∝ Φ(y f)·N(f; 0, k):
/// returns (log Z, mean, variance) by quadrature.
pub fn probit_posterior_by_quadrature(y: f64, k: f64) -> (f64, f64, f64) {
    let s = k.sqrt();
    let lim = 12.0 * s;
    let w = |f: f64| std_norm_cdf(y * f) * std_norm_pdf(f / s) / s;
    let z = integrate(&w, -lim, lim, 1e-13);
    let m1 = integrate(&|f: f64| f * w(f), -lim, lim, 1e-13) / z;
    let m2 = integrate(&|f: f64| f * f * w(f), -lim, lim, 1e-13) / z;
    (z.ln(), m1, m2 - m1 * m1)
}

/// Random inputs uniform on [0, side]^d.
pub fn random_inputs(n: usize, d: usize, side: f64, seed: u64) -> InputMatrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    InputMatrix::new(
        n,
        d,
        (0..n * d).map(|_| rng.random_range(0.0..side)).collect(),
    )
}

/// Random ±1 labels.
pub fn random_labels(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// A labeled dataset whose labels follow a smooth latent rule, so EP has
/// something learnable.
pub fn smooth_dataset(n: usize, d: usize, side: f64, seed: u64) -> Dataset {
    let x = random_inputs(n, d, side, seed);
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37);
    let freq: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let v: f64 = x
                .row(i)
                .iter()
                .zip(&freq)
                .map(|(xi, f)| (xi * f).sin())
                .sum();
            if v >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Dataset::new(x, y).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
