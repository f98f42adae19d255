//! Numeric LDLᵀ factorization over a frozen symbolic pattern.
//!
//! The factor stores the strictly lower triangle of L (implicit unit
//! diagonal) column-wise in the slot layout fixed by [`EliminationTree`],
//! plus the diagonal D. `P B Pᵀ = L D Lᵀ` with D > 0; every numeric
//! operation reads and writes only inside the frozen pattern, so explicit
//! zeros are kept as stored values.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::matrix::{SparseSymMatrix, SparseVector};
use super::symbolic::{EliminationTree, NO_PARENT};
use crate::error::SparseError;

/// Numeric LDLᵀ factor bound to a frozen [`EliminationTree`].
#[derive(Debug, Clone)]
pub struct LdlFactor {
    pub(super) symbolic: Arc<EliminationTree>,
    /// Strictly-lower values of L, aligned with the symbolic column storage.
    pub(super) l_values: Vec<f64>,
    /// Diagonal of D, strictly positive.
    pub(super) d: Vec<f64>,
    /// Set when an in-place modification died halfway; every operation
    /// refuses to run until `refactorize` restores a consistent state.
    pub(super) poisoned: bool,
    // Scratch owned by the factor so mutating operations do not allocate.
    pub(super) ws1: Vec<f64>,
    pub(super) ws2: Vec<f64>,
    pub(super) row_y: Vec<f64>,
    pub(super) queued: Vec<bool>,
}

/// Reusable workspace for [`LdlFactor::solve_into`].
#[derive(Debug, Clone)]
pub struct SolveScratch {
    x: Vec<f64>,
    visited: Vec<u64>,
    stamp: u64,
    reach: Vec<usize>,
}

impl SolveScratch {
    pub fn new(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            visited: vec![0; n],
            stamp: 0,
            reach: Vec::with_capacity(n),
        }
    }
}

/// Factor `P A Pᵀ = L D Lᵀ` using the pattern frozen in `symbolic`.
///
/// `A` must be symmetric positive definite and its pattern contained in the
/// pattern `symbolic` was computed from.
pub fn ldl_factorize(
    a: &SparseSymMatrix,
    symbolic: Arc<EliminationTree>,
) -> Result<LdlFactor, SparseError> {
    let n = symbolic.n();
    if a.n() != n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            got: a.n(),
        });
    }
    let mut factor = LdlFactor {
        l_values: vec![0.0; symbolic.nnz_strict_lower()],
        d: vec![0.0; n],
        poisoned: false,
        ws1: vec![0.0; n],
        ws2: vec![0.0; n],
        row_y: vec![0.0; n],
        queued: vec![false; n],
        symbolic,
    };
    factor.refactorize(a)?;
    Ok(factor)
}

impl LdlFactor {
    pub fn n(&self) -> usize {
        self.symbolic.n()
    }

    pub fn symbolic(&self) -> &Arc<EliminationTree> {
        &self.symbolic
    }

    pub fn d_values(&self) -> &[f64] {
        &self.d
    }

    /// Strictly-lower values of L, aligned with the symbolic pattern's
    /// column storage (see [`EliminationTree::col_pattern`]).
    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    /// Nonzeros of L including the unit diagonal.
    pub fn nnz_l(&self) -> usize {
        self.symbolic.nnz_l()
    }

    pub(super) fn assert_usable(&self) {
        assert!(
            !self.poisoned,
            "factor was corrupted by a failed modification; refactorize before reuse"
        );
    }

    /// Recompute the numeric factorization of `a` in place, reusing the
    /// frozen pattern. Up-looking: row `i` of L is obtained from a sparse
    /// triangular solve against the rows above it.
    ///
    /// `a`'s pattern must be contained in the pattern the symbolic analysis
    /// was computed from.
    pub fn refactorize(&mut self, a: &SparseSymMatrix) -> Result<(), SparseError> {
        let sym = Arc::clone(&self.symbolic);
        let n = sym.n();
        if a.n() != n {
            return Err(SparseError::DimensionMismatch {
                expected: n,
                got: a.n(),
            });
        }
        let l_rows = sym.l_rows();
        // Columns fill top-down as rows are processed; `filled[j]` counts
        // the entries of column j written so far and doubles as the bound of
        // valid column data during the row solves.
        let mut filled = vec![0usize; n];

        for i in 0..n {
            let (cols, pos) = sym.row_pattern(i);
            let mut dii = 0.0;
            let old_i = sym.permutation().new_to_old(i);
            let (rows, vals) = a.col(old_i);
            for (&old_r, &v) in rows.iter().zip(vals) {
                let j = sym.permutation().old_to_new(old_r);
                match j.cmp(&i) {
                    std::cmp::Ordering::Less => {
                        if cols.binary_search(&j).is_err() {
                            self.poisoned = true;
                            self.ws1.fill(0.0);
                            return Err(SparseError::OutsidePattern { row: old_i, col: old_r });
                        }
                        self.ws1[j] = v;
                    }
                    std::cmp::Ordering::Equal => dii = v,
                    std::cmp::Ordering::Greater => {}
                }
            }

            for (&j, &pj) in cols.iter().zip(pos) {
                let yj = self.ws1[j];
                self.ws1[j] = 0.0;
                let start = sym.col_storage_range(j).start;
                debug_assert_eq!(start + filled[j], pj);
                if yj != 0.0 {
                    for (&row, &lv) in l_rows[start..pj].iter().zip(&self.l_values[start..pj]) {
                        self.ws1[row] -= lv * yj;
                    }
                }
                let lij = yj / self.d[j];
                dii -= lij * yj;
                self.l_values[pj] = lij;
                filled[j] += 1;
            }

            if !dii.is_finite() || dii <= 0.0 {
                self.poisoned = true;
                // Leftover scatter is already consumed for rows <= i.
                return Err(SparseError::NotPositiveDefinite { column: old_i });
            }
            self.d[i] = dii;
        }
        self.poisoned = false;
        Ok(())
    }

    pub(crate) fn l_value(&self, p: usize) -> f64 {
        self.l_values[p]
    }

    /// log|B| of the factored matrix; invariant under the ordering.
    pub fn logdet(&self) -> f64 {
        self.assert_usable();
        self.d.iter().map(|v| v.ln()).sum()
    }

    /// Solve `B x = b` for sparse `b`, returning a dense solution in the
    /// caller's index space.
    pub fn solve(&self, b: &SparseVector) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        let mut scratch = SolveScratch::new(self.n());
        self.solve_into(b, &mut out, &mut scratch);
        out
    }

    /// Solve `B x = b` into `out`, reusing `scratch`.
    ///
    /// The forward substitution visits only the reach of `b`'s indices in
    /// the elimination tree; the backward pass runs from the highest reached
    /// column down.
    pub fn solve_into(&self, b: &SparseVector, out: &mut [f64], scratch: &mut SolveScratch) {
        self.assert_usable();
        let sym = &self.symbolic;
        let n = sym.n();
        assert_eq!(out.len(), n);

        // Reach of the permuted support: ancestors in the elimination tree.
        scratch.stamp += 1;
        let stamp = scratch.stamp;
        scratch.reach.clear();
        scratch.x.fill(0.0);
        for (old_i, v) in b.iter() {
            let mut j = sym.permutation().old_to_new(old_i);
            scratch.x[j] = v;
            while j != NO_PARENT && scratch.visited[j] != stamp {
                scratch.visited[j] = stamp;
                scratch.reach.push(j);
                j = sym.parent(j);
            }
        }
        scratch.reach.sort_unstable();

        let x = &mut scratch.x;
        // Forward: L y = P b over the reach only.
        for &j in &scratch.reach {
            let xj = x[j];
            if xj != 0.0 {
                let r = sym.col_storage_range(j);
                let rows = sym.col_pattern(j);
                for (off, p) in r.enumerate() {
                    x[rows[off]] -= self.l_values[p] * xj;
                }
            }
        }
        // Diagonal.
        for &j in &scratch.reach {
            x[j] /= self.d[j];
        }
        // Backward: Lᵀ z = y, dense below the highest reached column.
        let top = scratch.reach.last().copied().unwrap_or(0);
        for j in (0..=top).rev() {
            let rows = sym.col_pattern(j);
            let r = sym.col_storage_range(j);
            let mut acc = x[j];
            for (off, p) in r.enumerate() {
                acc -= self.l_values[p] * x[rows[off]];
            }
            x[j] = acc;
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = x[sym.permutation().old_to_new(k)];
        }
    }

    /// Solve with a dense right-hand side (no reach pruning).
    pub fn solve_dense(&self, b: &[f64]) -> Vec<f64> {
        self.assert_usable();
        let sym = &self.symbolic;
        let n = sym.n();
        assert_eq!(b.len(), n);
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[sym.permutation().old_to_new(i)] = b[i];
        }
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                let rows = sym.col_pattern(j);
                for (off, p) in sym.col_storage_range(j).enumerate() {
                    x[rows[off]] -= self.l_values[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let rows = sym.col_pattern(j);
            let mut acc = x[j];
            for (off, p) in sym.col_storage_range(j).enumerate() {
                acc -= self.l_values[p] * x[rows[off]];
            }
            x[j] = acc;
        }
        (0..n)
            .map(|i| x[sym.permutation().old_to_new(i)])
            .collect()
    }

    /// Dense reconstruction of the factored matrix in the caller's index
    /// space (oracle/debug use).
    pub fn reconstruct_dense(&self) -> DMatrix<f64> {
        self.assert_usable();
        let n = self.n();
        let sym = &self.symbolic;
        let mut l = DMatrix::<f64>::identity(n, n);
        for j in 0..n {
            let rows = sym.col_pattern(j);
            for (off, p) in sym.col_storage_range(j).enumerate() {
                l[(rows[off], j)] = self.l_values[p];
            }
        }
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.d.clone()));
        let pbp = &l * d * l.transpose();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(
                    sym.permutation().new_to_old(i),
                    sym.permutation().new_to_old(j),
                )] = pbp[(i, j)];
            }
        }
        out
    }

    /// Standard Cholesky factor `L·D^{1/2}` of the permuted matrix, dense.
    /// `P B Pᵀ = G Gᵀ` for the returned G.
    pub fn llt_dense_permuted(&self) -> DMatrix<f64> {
        self.assert_usable();
        let n = self.n();
        let mut g = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let sq = self.d[j].sqrt();
            g[(j, j)] = sq;
            let rows = self.symbolic.col_pattern(j);
            for (off, p) in self.symbolic.col_storage_range(j).enumerate() {
                g[(rows[off], j)] = self.l_values[p] * sq;
            }
        }
        g
    }

}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::sparse::ordering::minimum_degree;
    use crate::sparse::perm::Permutation;
    use crate::sparse::symbolic::symbolic_analyze;
    use approx::assert_abs_diff_eq;

    fn factor_with_identity(a: &SparseSymMatrix) -> LdlFactor {
        let sym = symbolic_analyze(a, &Permutation::identity(a.n()));
        ldl_factorize(a, Arc::new(sym)).unwrap()
    }

    #[test]
    fn identity_factorizes_to_identity() {
        let a =
            SparseSymMatrix::from_triplets(3, &(0..3).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
                .unwrap();
        let f = factor_with_identity(&a);
        assert_eq!(f.d_values(), &[1.0, 1.0, 1.0]);
        assert_eq!(f.logdet(), 0.0);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let a = SparseSymMatrix::from_triplets(2, &[(0, 0, 4.0), (1, 0, 2.0), (1, 1, 3.0)])
            .unwrap();
        let f = factor_with_identity(&a);
        assert_eq!(f.d_values(), &[4.0, 2.0]);
        let rows = f.symbolic().col_pattern(0);
        assert_eq!(rows, &[1]);
        assert_eq!(f.l_value(0), 0.5);

        let x = f.solve(&SparseVector::from_dense(&[4.0, 2.0]));
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn diag_logdet() {
        let a = SparseSymMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let f = factor_with_identity(&a);
        assert_abs_diff_eq!(f.logdet(), 6.0_f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn non_spd_reports_failing_column() {
        let a = SparseSymMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)])
            .unwrap();
        let sym = symbolic_analyze(&a, &Permutation::identity(2));
        let err = ldl_factorize(&a, Arc::new(sym)).unwrap_err();
        assert!(matches!(err, SparseError::NotPositiveDefinite { column: 1 }));
    }

    #[test]
    fn identity_solve_of_unit_vector() {
        let a =
            SparseSymMatrix::from_triplets(3, &(0..3).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
                .unwrap();
        let f = factor_with_identity(&a);
        let x = f.solve(&SparseVector::unit(2));
        assert_eq!(x, vec![0.0, 0.0, 1.0]);
    }

    /// Deterministic pseudo-random SPD matrix: sprinkled off-diagonals with a
    /// dominant diagonal.
    pub(crate) fn random_spd(n: usize, density: f64, seed: u64) -> SparseSymMatrix {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        let mut rowsum = vec![0.0; n];
        for i in 0..n {
            for j in 0..i {
                if rng.random::<f64>() < density {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    t.push((i, j, v));
                    rowsum[i] += v.abs();
                    rowsum[j] += v.abs();
                }
            }
        }
        for (i, rs) in rowsum.iter().enumerate() {
            t.push((i, i, rs + 0.5 + rng.random::<f64>()));
        }
        SparseSymMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn random_spd_reconstruction_and_solve_match_dense_oracle() {
        for seed in 0..4 {
            let n = 50;
            let a = random_spd(n, 0.15, seed);
            let perm = minimum_degree(&a);
            let sym = symbolic_analyze(&a, &perm);
            let f = ldl_factorize(&a, Arc::new(sym)).unwrap();

            let dense = a.to_dense();
            let rebuilt = f.reconstruct_dense();
            let scale = dense.amax();
            assert!(
                (&rebuilt - &dense).amax() < 1e-10 * scale,
                "reconstruction drift"
            );

            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed + 100);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = f.solve_dense(&b);
            let oracle = dense
                .clone()
                .cholesky()
                .unwrap()
                .solve(&nalgebra::DVector::from_vec(b.clone()));
            for i in 0..n {
                assert_abs_diff_eq!(x[i], oracle[i], epsilon = 1e-10);
            }

            // Sparse RHS path agrees with the dense RHS path.
            let sv = SparseVector::new(vec![(3, 1.5), (n - 1, -0.5)]).unwrap();
            let xs = f.solve(&sv);
            let xd = f.solve_dense(&sv.to_dense(n));
            for i in 0..n {
                assert_abs_diff_eq!(xs[i], xd[i], epsilon = 1e-12);
            }

            // logdet against the dense oracle.
            let ld_oracle = dense.cholesky().unwrap().determinant().ln();
            assert_abs_diff_eq!(f.logdet(), ld_oracle, epsilon = 1e-10 * ld_oracle.abs().max(1.0));
        }
    }

    #[test]
    fn ordering_changes_pattern_but_not_values() {
        let a = random_spd(40, 0.12, 7);
        let id = factor_with_identity(&a);
        let perm = minimum_degree(&a);
        let sym = symbolic_analyze(&a, &perm);
        let md = ldl_factorize(&a, Arc::new(sym)).unwrap();

        assert_abs_diff_eq!(id.logdet(), md.logdet(), epsilon = 1e-10);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let x1 = id.solve_dense(&b);
        let x2 = md.solve_dense(&b);
        for i in 0..40 {
            assert_abs_diff_eq!(x1[i], x2[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn llt_conversion_squares_back() {
        let a = random_spd(20, 0.2, 3);
        let perm = minimum_degree(&a);
        let sym = symbolic_analyze(&a, &perm);
        let f = ldl_factorize(&a, Arc::new(sym.clone())).unwrap();
        let g = f.llt_dense_permuted();
        let pbp = &g * g.transpose();
        let dense = a.to_dense();
        for i in 0..20 {
            for j in 0..20 {
                let oi = sym.permutation().new_to_old(i);
                let oj = sym.permutation().new_to_old(j);
                assert_abs_diff_eq!(pbp[(i, j)], dense[(oi, oj)], epsilon = 1e-10);
            }
        }
    }
}
