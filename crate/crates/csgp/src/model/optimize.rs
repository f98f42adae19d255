//! Quasi-Newton minimization with a strong-Wolfe line search.
//!
//! BFGS on the inverse Hessian, dimension d+1 (σ² plus length-scales), so
//! the dense update is trivial next to one objective evaluation. The line
//! search treats non-converged EP evaluations as failed points: it never
//! accepts a step whose gradient would be computed off a fixed point.

use super::objective::{Evaluation, MapObjective};
use super::{ModelConfig, OptimizerConfig};
use crate::data::Dataset;
use crate::ep::EpState;
use crate::kernel::Hyperparams;

/// One accepted optimizer iterate.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step_len: f64,
}

/// Outcome of [`optimize`].
#[derive(Debug)]
pub struct OptimizeResult {
    pub log_theta: Vec<f64>,
    pub hyp: Hyperparams,
    pub objective: f64,
    /// Converged EP state at the returned hyperparameters.
    pub state: EpState,
    pub trace: Vec<IterRecord>,
    /// Every line search failed before the gradient tolerance was met.
    pub stalled: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Generic BFGS driver. The objective returns (value, gradient, valid);
/// invalid points are rejected by the line search.
pub(crate) fn minimize<F>(
    mut f: F,
    x0: &[f64],
    opts: &OptimizerConfig,
) -> (Vec<f64>, f64, Vec<IterRecord>, bool)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>, bool),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut gx, valid) = f(&x);
    if !valid || !fx.is_finite() {
        return (x, fx, Vec::new(), true);
    }
    let mut h = identity(n);
    let mut trace = Vec::new();
    let mut best = (x.clone(), fx);
    let mut stalled = false;

    for iteration in 0..opts.max_iterations {
        let gnorm = gx.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gnorm < opts.grad_tol {
            break;
        }
        let mut p = neg_matvec(&h, &gx);
        if dot(&p, &gx) >= 0.0 {
            // Lost descent; restart from steepest descent.
            h = identity(n);
            p = gx.iter().map(|g| -g).collect();
        }

        let ls = wolfe_line_search(&mut f, &x, fx, &gx, &p, opts);
        let (alpha, f_new, g_new) = match ls {
            Some(t) => t,
            None => {
                // One restart with steepest descent, then give up.
                h = identity(n);
                let p2: Vec<f64> = gx.iter().map(|g| -g).collect();
                match wolfe_line_search(&mut f, &x, fx, &gx, &p2, opts) {
                    Some(t) => {
                        p = p2;
                        t
                    }
                    None => {
                        stalled = true;
                        break;
                    }
                }
            }
        };

        let s: Vec<f64> = p.iter().map(|v| v * alpha).collect();
        let yv: Vec<f64> = g_new.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            bfgs_update(&mut h, &s, &yv, sy);
        }
        for k in 0..n {
            x[k] += s[k];
        }
        fx = f_new;
        gx = g_new;
        if fx < best.1 {
            best = (x.clone(), fx);
        }
        trace.push(IterRecord {
            iteration,
            objective: fx,
            grad_norm: gx.iter().fold(0.0_f64, |m, g| m.max(g.abs())),
            step_len: alpha * norm(&p),
        });
    }

    (best.0, best.1, trace, stalled)
}

/// Strong-Wolfe line search (bracket then zoom).
fn wolfe_line_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    opts: &OptimizerConfig,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>, bool),
{
    let c1 = opts.wolfe_c1;
    let c2 = opts.wolfe_c2;
    let dphi0 = dot(g0, p);
    if dphi0 >= 0.0 {
        return None;
    }
    let probe = |f: &mut F, alpha: f64| -> (f64, Vec<f64>, f64, bool) {
        let xt: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect();
        let (v, g, ok) = f(&xt);
        let d = dot(&g, p);
        (v, g, d, ok && v.is_finite())
    };

    let mut alpha_prev = 0.0;
    let mut phi_prev = f0;
    let mut alpha = 1.0;
    for iter in 0..12 {
        let (phi, g, dphi, ok) = probe(f, alpha);
        if !ok {
            // Invalid territory: bracket back toward the last good point.
            let z = zoom(f, x, f0, dphi0, p, alpha_prev, phi_prev, alpha, c1, c2);
            return z;
        }
        if phi > f0 + c1 * alpha * dphi0 || (iter > 0 && phi >= phi_prev) {
            return zoom(f, x, f0, dphi0, p, alpha_prev, phi_prev, alpha, c1, c2);
        }
        if dphi.abs() <= -c2 * dphi0 {
            return Some((alpha, phi, g));
        }
        if dphi >= 0.0 {
            return zoom(f, x, f0, dphi0, p, alpha, phi, alpha_prev, c1, c2);
        }
        alpha_prev = alpha;
        phi_prev = phi;
        alpha *= 2.0;
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    p: &[f64],
    mut lo: f64,
    mut phi_lo: f64,
    mut hi: f64,
    c1: f64,
    c2: f64,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>, bool),
{
    for _ in 0..20 {
        let alpha = 0.5 * (lo + hi);
        let xt: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect();
        let (phi, g, ok) = f(&xt);
        let dphi = dot(&g, p);
        if !ok || !phi.is_finite() || phi > f0 + c1 * alpha * dphi0 || phi >= phi_lo {
            hi = alpha;
        } else {
            if dphi.abs() <= -c2 * dphi0 {
                return Some((alpha, phi, g));
            }
            if dphi * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = alpha;
            phi_lo = phi;
        }
        if (hi - lo).abs() < 1e-12 {
            break;
        }
    }
    // Accept the best sufficient-decrease point even without curvature.
    if phi_lo < f0 && lo > 0.0 {
        let xt: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + lo * pi).collect();
        let (phi, g, ok) = f(&xt);
        if ok && phi.is_finite() && phi < f0 {
            return Some((lo, phi, g));
        }
    }
    None
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn neg_matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| -dot(row, v)).collect()
}

/// Inverse-Hessian BFGS update: H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}

/// Default starting point: log σ² = 0, log l_k = log(feature range / 10).
pub fn default_init(dataset: &Dataset) -> Vec<f64> {
    let d = dataset.d();
    let mut v = Vec::with_capacity(d + 1);
    v.push(0.0);
    for k in 0..d {
        let (lo, hi) = dataset.x.feature_range(k);
        let range = (hi - lo).max(1e-6);
        v.push((range / 10.0).ln());
    }
    v
}

/// MAP hyperparameter search for a dataset.
pub fn optimize(dataset: &Dataset, config: &ModelConfig) -> Result<OptimizeResult, crate::SparseError> {
    let x0 = config
        .opt
        .init_log_params
        .clone()
        .unwrap_or_else(|| default_init(dataset));
    assert_eq!(x0.len(), dataset.d() + 1, "init must be [log σ², log l…]");

    let mut objective = MapObjective::new(dataset, config);
    let (x_best, f_best, trace, stalled) = {
        let obj = &mut objective;
        minimize(
            |log_theta: &[f64]| {
                let Evaluation {
                    value,
                    grad,
                    converged,
                    ..
                } = obj.eval(log_theta);
                (value, grad, converged)
            },
            &x0,
            &config.opt,
        )
    };

    let evaluations = objective.evaluations;
    let state = objective.state_at(&x_best)?;
    let iterations = trace.len();
    Ok(OptimizeResult {
        hyp: Hyperparams::from_log_params(config.kind, &x_best),
        log_theta: x_best,
        objective: f_best,
        state,
        trace,
        stalled,
        iterations,
        evaluations,
    })
}
