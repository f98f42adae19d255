//! Kernel-matrix assembly.
//!
//! For compactly supported kinds only pairs with scaled distance r < 1 are
//! stored (plus every diagonal); the squared exponential flows through the
//! same sparse interface with a full pattern so inference has a single code
//! path. Derivative matrices live on exactly the pattern of K as value
//! arrays aligned with its storage.
//!
//! Pair enumeration is a plain O(n²·d) scan; at the sizes this crate
//! targets the scan is a small fraction of one EP sweep.

use super::{kernel_gradients_into, kernel_value, scaled_distance, Hyperparams};
use crate::data::InputMatrix;
use crate::sparse::{SparseSymMatrix, SparseVector};

/// Covariance matrix and its per-hyperparameter derivatives on a shared
/// pattern.
#[derive(Debug, Clone)]
pub struct KernelMatrixBundle {
    k: SparseSymMatrix,
    /// `grads[p][slot]` aligned with `k`'s storage; parameter order is
    /// `[log σ², log l₁, …, log l_d]`.
    grads: Vec<Vec<f64>>,
    hyp: Hyperparams,
    jitter_rel: f64,
}

impl KernelMatrixBundle {
    pub fn k(&self) -> &SparseSymMatrix {
        &self.k
    }

    pub fn hyp(&self) -> &Hyperparams {
        &self.hyp
    }

    pub fn jitter_rel(&self) -> f64 {
        self.jitter_rel
    }

    pub fn n_params(&self) -> usize {
        self.grads.len()
    }

    /// Derivative values for parameter `p`, aligned with `k`'s storage.
    pub fn grad_values(&self, p: usize) -> &[f64] {
        &self.grads[p]
    }

    /// Materialize ∂K/∂θ_p as a matrix (shares K's pattern by construction).
    pub fn grad_as_matrix(&self, p: usize) -> SparseSymMatrix {
        let mut m = self.k.clone();
        let vals = self.grads[p].clone();
        for j in 0..m.n() {
            let r = m.col_range(j);
            let slice: Vec<f64> = vals[r.clone()].to_vec();
            // set_col_sym also writes the mirror, which holds the same value
            // because the gradient matrices are symmetric.
            m.set_col_sym(j, &slice);
        }
        m
    }
}

/// Pairs within the support radius, as (i, j, value) triplets with i > j.
fn support_triplets(x: &InputMatrix, hyp: &Hyperparams, jitter_rel: f64) -> Vec<(usize, usize, f64)> {
    let n = x.n();
    let compact = hyp.kind.compactly_supported();
    let mut t = Vec::new();
    for i in 0..n {
        let xi = x.row(i);
        for j in 0..i {
            let r = scaled_distance(xi, x.row(j), &hyp.length_scales);
            if !compact || r < 1.0 {
                t.push((i, j, kernel_value(hyp, r)));
            }
        }
        t.push((i, i, hyp.sigma2 * (1.0 + jitter_rel)));
    }
    t
}

/// Covariance matrix only (no derivative arrays).
///
/// `jitter_rel` scales the diagonal to `σ²·(1 + jitter_rel)`; being
/// proportional to σ² it keeps the whole matrix an exact multiple of σ².
pub fn build_kernel_values(x: &InputMatrix, hyp: &Hyperparams, jitter_rel: f64) -> SparseSymMatrix {
    assert_eq!(x.d(), hyp.input_dim(), "hyperparameter dimension mismatch");
    assert!(jitter_rel >= 0.0);
    SparseSymMatrix::from_triplets(x.n(), &support_triplets(x, hyp, jitter_rel))
        .expect("kernel triplets are in range and symmetric")
}

/// Covariance matrix plus derivative matrices with respect to the
/// log-hyperparameters, all on one pattern.
pub fn build_kernel_matrix(
    x: &InputMatrix,
    hyp: &Hyperparams,
    jitter_rel: f64,
) -> KernelMatrixBundle {
    let k = build_kernel_values(x, hyp, jitter_rel);
    let np = hyp.n_params();
    let nnz = k.nnz();
    let mut grads = vec![vec![0.0; nnz]; np];
    let mut buf = vec![0.0; np];

    for j in 0..k.n() {
        let range = k.col_range(j);
        let rows = &k.row_indices()[range.clone()];
        for (off, p) in range.enumerate() {
            let i = rows[off];
            if i == j {
                // Diagonal is σ²(1+jitter_rel): its log-σ² derivative is
                // itself, its length-scale derivatives vanish.
                grads[0][p] = k.values()[p];
            } else {
                kernel_gradients_into(hyp, x.row(i), x.row(j), &mut buf);
                for (q, g) in buf.iter().enumerate() {
                    grads[q][p] = *g;
                }
            }
        }
    }

    KernelMatrixBundle {
        k,
        grads,
        hyp: hyp.clone(),
        jitter_rel,
    }
}

/// Cross-covariance columns k(X_train, x*) for each test point, support
/// truncation included, no jitter anywhere.
pub fn cross_kernel(
    x_train: &InputMatrix,
    x_star: &InputMatrix,
    hyp: &Hyperparams,
) -> Vec<SparseVector> {
    assert_eq!(x_train.d(), x_star.d());
    assert_eq!(x_train.d(), hyp.input_dim());
    let compact = hyp.kind.compactly_supported();
    let mut out = Vec::with_capacity(x_star.n());
    for s in 0..x_star.n() {
        let xs = x_star.row(s);
        let mut pairs = Vec::new();
        for i in 0..x_train.n() {
            let r = scaled_distance(xs, x_train.row(i), &hyp.length_scales);
            if !compact || r < 1.0 {
                pairs.push((i, kernel_value(hyp, r)));
            }
        }
        out.push(SparseVector::new(pairs).expect("train indices are unique"));
    }
    out
}
