//! Selective inversion: entries of B⁻¹ on the factor's fill pattern.
//!
//! Working back from the last column, each stored entry of the inverse is a
//! short combination of already-computed entries:
//!
//! ```text
//! Z_ij = −Σ_{k ∈ pat(L:,j)} L_kj · Z_ki          (i ∈ pat(L:,j))
//! Z_jj = 1/d_j − Σ_{k ∈ pat(L:,j)} L_kj · Z_kj
//! ```
//!
//! The recursion is closed on the fill pattern of L, so the computed entries
//! equal the exact inverse there — no dense inverse is ever formed. The
//! trace terms of the marginal-likelihood gradient only need inverse entries
//! where B itself is nonzero, a subset of the fill pattern.

use super::factor::LdlFactor;
use super::matrix::SparseSymMatrix;

/// Entries of B⁻¹ restricted to the fill pattern of L (plus its mirror),
/// returned in the caller's index space.
pub fn takahashi_sparse_inverse(factor: &LdlFactor) -> SparseSymMatrix {
    let sym = factor.symbolic();
    let n = sym.n();
    let l_rows = sym.l_rows();

    let mut z_vals = vec![0.0; sym.nnz_strict_lower()];
    let mut z_diag = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut sc = vec![0.0; n];

    for j in (0..n).rev() {
        let range = sym.col_storage_range(j);
        let pattern = &l_rows[range.clone()];

        for (off, pk) in range.clone().enumerate() {
            let lkj = factor.l_value(pk);
            if lkj == 0.0 {
                continue;
            }
            let k = pattern[off];
            // Scatter the symmetric column k of the partial inverse.
            sc[k] = z_diag[k];
            let krange = sym.col_storage_range(k);
            for (koff, kp) in krange.clone().enumerate() {
                sc[l_rows[kp]] = z_vals[kp];
                let _ = koff;
            }
            let (rcols, rpos) = sym.row_pattern(k);
            for (&c, &p) in rcols.iter().zip(rpos) {
                sc[c] = z_vals[p];
            }

            for &i in pattern {
                acc[i] -= lkj * sc[i];
            }

            // Un-scatter.
            sc[k] = 0.0;
            for kp in krange {
                sc[l_rows[kp]] = 0.0;
            }
            for &c in rcols {
                sc[c] = 0.0;
            }
        }

        let mut diag = 1.0 / factor.d_values()[j];
        for (off, p) in range.enumerate() {
            let i = pattern[off];
            z_vals[p] = acc[i];
            acc[i] = 0.0;
            diag -= factor.l_value(p) * z_vals[p];
        }
        z_diag[j] = diag;
    }

    // Map back to the caller's index space (lower triangle; the constructor
    // mirrors it).
    let perm = sym.permutation();
    let mut triplets = Vec::with_capacity(sym.nnz_l());
    for (j, &zd) in z_diag.iter().enumerate() {
        triplets.push((perm.new_to_old(j), perm.new_to_old(j), zd));
        for (off, p) in sym.col_storage_range(j).enumerate() {
            let i = sym.col_pattern(j)[off];
            triplets.push((perm.new_to_old(i), perm.new_to_old(j), z_vals[p]));
        }
    }
    SparseSymMatrix::from_triplets(n, &triplets)
        .expect("selective inverse pattern is valid by construction")
}
