//! In-place factor modifications: fused rank-one update/downdate and row
//! replacement.
//!
//! Both operations exploit the frozen pattern: the columns touched by a
//! rank-one change lie on elimination-tree paths above the modification's
//! support, and a row replacement changes only row i, column i, the pivot,
//! and a rank-one correction of the trailing block. Nothing is ever
//! re-analyzed structurally.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::factor::LdlFactor;
use super::matrix::SparseVector;
use super::symbolic::NO_PARENT;
use crate::error::SparseError;

impl LdlFactor {
    /// Apply `B ← B + w1 w1ᵀ − w2 w2ᵀ` to the factor in one fused pass.
    ///
    /// The supports of `w1` and `w2` must stay within the factor's frozen
    /// pattern reach (fill generated by the modification must already have a
    /// slot). On an indefinite downdate the factor is poisoned and must be
    /// refactorized by the caller.
    pub fn rank1_update_downdate(
        &mut self,
        w1: &SparseVector,
        w2: &SparseVector,
    ) -> Result<(), SparseError> {
        self.assert_usable();
        let n = self.n();
        let mut seeds: Vec<usize> = Vec::with_capacity(w1.nnz() + w2.nnz());
        for (i, v) in w1.iter() {
            assert!(i < n, "w1 index {i} out of range");
            let p = self.symbolic.permutation().old_to_new(i);
            self.ws1[p] = v;
            seeds.push(p);
        }
        for (i, v) in w2.iter() {
            assert!(i < n, "w2 index {i} out of range");
            let p = self.symbolic.permutation().old_to_new(i);
            self.ws2[p] = v;
            seeds.push(p);
        }
        self.fused_update_downdate(&seeds)
            .map_err(|col| SparseError::IndefiniteDowndate {
                column: self.symbolic.permutation().new_to_old(col),
            })
    }

    /// Replace row/column `i` (caller index space) of the factored matrix.
    ///
    /// `new_row` is the complete new row of B including the diagonal; its
    /// pattern must be contained in the frozen pattern. Three stages: a
    /// sparse triangular solve for the new leading-row entries, direct
    /// formulas for the new pivot and column, then a fused rank-one
    /// update/downdate of the trailing block with `w1 = l₃₂√d₂₂` (old
    /// column) and `w2 = l̄₃₂√d̄₂₂` (new column).
    pub fn ldl_row_modify(&mut self, new_row: &SparseVector, i: usize) -> Result<(), SparseError> {
        self.assert_usable();
        let n = self.n();
        if i >= n {
            return Err(SparseError::IndexOutOfRange { row: i, col: i, n });
        }
        let sym = std::sync::Arc::clone(&self.symbolic);
        let perm = sym.permutation();
        let ih = perm.old_to_new(i);
        let (row_cols, row_pos) = sym.row_pattern(ih);
        let col_rows = sym.col_pattern(ih);
        let col_range = sym.col_storage_range(ih);
        let l_rows = sym.l_rows();

        // Validate before touching any state.
        let mut has_diag = false;
        for (oi, _) in new_row.iter() {
            if oi >= n {
                return Err(SparseError::IndexOutOfRange { row: oi, col: i, n });
            }
            let j = perm.old_to_new(oi);
            match j.cmp(&ih) {
                std::cmp::Ordering::Less => {
                    if row_cols.binary_search(&j).is_err() {
                        return Err(SparseError::OutsidePattern { row: i, col: oi });
                    }
                }
                std::cmp::Ordering::Equal => has_diag = true,
                std::cmp::Ordering::Greater => {
                    if col_rows.binary_search(&j).is_err() {
                        return Err(SparseError::OutsidePattern { row: oi, col: i });
                    }
                }
            }
        }
        if !has_diag {
            return Err(SparseError::RowModifyFailed {
                column: i,
                reason: "new row lacks its diagonal entry".into(),
            });
        }

        // Scatter b̄₁₂ into row_y, b̄₃₂ into ws2, and w1 = l₃₂·√d₂₂ from the
        // current column into ws1.
        let sqrt_d_old = self.d[ih].sqrt();
        let mut b22 = 0.0;
        for (oi, v) in new_row.iter() {
            let j = perm.old_to_new(oi);
            match j.cmp(&ih) {
                std::cmp::Ordering::Less => self.row_y[j] = v,
                std::cmp::Ordering::Equal => b22 = v,
                std::cmp::Ordering::Greater => self.ws2[j] = v,
            }
        }
        for (off, p) in col_range.clone().enumerate() {
            self.ws1[col_rows[off]] = self.l_values[p] * sqrt_d_old;
        }

        // Sparse solve L₁₁ y = b̄₁₂ over the frozen row pattern (y = D₁₁l̄₁₂);
        // each y value is parked back in row_y after its column is processed.
        let mut d_new = b22;
        for (&j, &pj) in row_cols.iter().zip(row_pos) {
            let yj = self.row_y[j];
            if yj != 0.0 {
                let start = sym.col_storage_range(j).start;
                for (&row, &lv) in l_rows[start..pj].iter().zip(&self.l_values[start..pj]) {
                    self.row_y[row] -= lv * yj;
                }
                d_new -= yj * yj / self.d[j];
            }
            self.row_y[j] = yj;
        }

        if !d_new.is_finite() || d_new <= 0.0 {
            // Nothing was written; the factor still matches the old matrix.
            for &j in row_cols {
                self.row_y[j] = 0.0;
            }
            for &k in col_rows {
                self.ws1[k] = 0.0;
                self.ws2[k] = 0.0;
            }
            return Err(SparseError::RowModifyFailed {
                column: i,
                reason: format!("new pivot {d_new:.3e} is not positive"),
            });
        }

        // b̄₃₂ − L₃₁ D₁₁ l̄₁₂ accumulates in ws2.
        for (&j, &pj) in row_cols.iter().zip(row_pos) {
            let yj = self.row_y[j];
            if yj != 0.0 {
                let end = sym.col_storage_range(j).end;
                for (&row, &lv) in l_rows[pj + 1..end].iter().zip(&self.l_values[pj + 1..end]) {
                    self.ws2[row] -= lv * yj;
                }
            }
        }

        // Commit row i, the pivot, and column i; ws2 becomes w2 = l̄₃₂·√d̄₂₂.
        for (&j, &pj) in row_cols.iter().zip(row_pos) {
            let yj = self.row_y[j];
            self.row_y[j] = 0.0;
            self.l_values[pj] = yj / self.d[j];
        }
        self.d[ih] = d_new;
        let sqrt_d_new = d_new.sqrt();
        for (off, p) in col_range.enumerate() {
            let k = col_rows[off];
            let lnew = self.ws2[k] / d_new;
            self.ws2[k] = lnew * sqrt_d_new;
            self.l_values[p] = lnew;
        }

        // Trailing block: L₃₃D₃₃L₃₃ᵀ + w1w1ᵀ − w2w2ᵀ in one fused pass.
        self.fused_update_downdate(col_rows)
            .map_err(|col| SparseError::RowModifyFailed {
                column: i,
                reason: format!(
                    "indefinite downdate in trailing column {}",
                    sym.permutation().new_to_old(col)
                ),
            })
    }

    /// Core fused pass. `seeds` are permuted indices covering the supports
    /// already scattered into `ws1` (update) and `ws2` (downdate); the walk
    /// climbs elimination-tree paths in ascending column order, consuming
    /// and re-zeroing workspace entries as it goes. On failure the
    /// workspaces are cleared, the factor is poisoned, and the failing
    /// permuted column is returned.
    fn fused_update_downdate(&mut self, seeds: &[usize]) -> Result<(), usize> {
        let sym = std::sync::Arc::clone(&self.symbolic);
        let l_rows = sym.l_rows();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::with_capacity(seeds.len() + 8);
        let mut touched: Vec<usize> = Vec::with_capacity(seeds.len() + 8);
        for &s in seeds {
            if !self.queued[s] {
                self.queued[s] = true;
                touched.push(s);
                heap.push(Reverse(s));
            }
        }

        let mut alpha1 = 1.0_f64;
        let mut alpha2 = 1.0_f64;
        let mut failed: Option<usize> = None;
        while let Some(Reverse(j)) = heap.pop() {
            let wj1 = self.ws1[j];
            let wj2 = self.ws2[j];
            self.ws1[j] = 0.0;
            self.ws2[j] = 0.0;
            if wj1 != 0.0 || wj2 != 0.0 {
                let mut dj = self.d[j];
                let mut g1 = 0.0;
                if wj1 != 0.0 {
                    let a_new = alpha1 + wj1 * wj1 / dj;
                    let d_new = dj * a_new / alpha1;
                    g1 = wj1 / (dj * a_new);
                    alpha1 = a_new;
                    dj = d_new;
                }
                let mut g2 = 0.0;
                if wj2 != 0.0 {
                    let a_new = alpha2 - wj2 * wj2 / dj;
                    let d_new = dj * a_new / alpha2;
                    if !d_new.is_finite() || a_new <= 0.0 || d_new <= 0.0 {
                        failed = Some(j);
                        break;
                    }
                    g2 = wj2 / (dj * a_new);
                    alpha2 = a_new;
                    dj = d_new;
                }
                self.d[j] = dj;

                let range = sym.col_storage_range(j);
                for p in range {
                    let k = l_rows[p];
                    let mut l = self.l_values[p];
                    if wj1 != 0.0 {
                        let w = self.ws1[k] - wj1 * l;
                        self.ws1[k] = w;
                        l += g1 * w;
                    }
                    if wj2 != 0.0 {
                        let w = self.ws2[k] - wj2 * l;
                        self.ws2[k] = w;
                        l -= g2 * w;
                    }
                    self.l_values[p] = l;
                }
            }
            let parent = sym.parent(j);
            if parent != NO_PARENT && !self.queued[parent] {
                self.queued[parent] = true;
                touched.push(parent);
                heap.push(Reverse(parent));
            }
        }

        for &t in &touched {
            self.queued[t] = false;
        }
        if let Some(col) = failed {
            self.poisoned = true;
            self.ws1.fill(0.0);
            self.ws2.fill(0.0);
            return Err(col);
        }
        Ok(())
    }
}
