//! Symbolic analysis: elimination tree and the frozen fill pattern of L.
//!
//! The pattern computed here is an invariant of the factor for its whole
//! lifetime: numeric factorization, row modification and rank-one changes all
//! write strictly inside it. Freezing the pattern is what makes repeated row
//! modifications cheap — no structural re-analysis ever happens after this
//! pass.

use super::matrix::SparseSymMatrix;
use super::perm::Permutation;

/// Sentinel parent for roots of the elimination tree.
pub const NO_PARENT: usize = usize::MAX;

/// Elimination tree plus the exact fill pattern of L for `P A Pᵀ`.
///
/// All index data lives in the permuted space; the embedded [`Permutation`]
/// maps back to caller indices. The pattern is stored twice: column-wise
/// (CSC of the strictly lower triangle, rows ascending) and row-wise with
/// positions into the column storage, because the numeric kernels consume
/// rows while updates consume columns.
#[derive(Debug, Clone)]
pub struct EliminationTree {
    n: usize,
    perm: Permutation,
    parent: Vec<usize>,
    col_counts: Vec<usize>,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_pos: Vec<usize>,
}

/// Compute the elimination tree and per-column fill counts of L for the
/// pattern of `a` permuted by `perm`.
pub fn symbolic_analyze(a: &SparseSymMatrix, perm: &Permutation) -> EliminationTree {
    let n = a.n();
    assert_eq!(perm.len(), n, "permutation length must match matrix order");

    let mut parent = vec![NO_PARENT; n];
    let mut flag = vec![usize::MAX; n];
    let mut row_patterns: Vec<Vec<usize>> = Vec::with_capacity(n);

    let mut scratch: Vec<usize> = Vec::new();
    for i in 0..n {
        flag[i] = i;
        scratch.clear();
        let (rows, _) = a.col(perm.new_to_old(i));
        for &old_r in rows {
            let j = perm.old_to_new(old_r);
            if j < i {
                scratch.push(j);
            }
        }
        // Row i of L reaches every ancestor of its matrix entries below i.
        let mut pattern = Vec::new();
        for &start in scratch.iter() {
            let mut j = start;
            while flag[j] != i {
                if parent[j] == NO_PARENT {
                    parent[j] = i;
                }
                pattern.push(j);
                flag[j] = i;
                j = parent[j];
            }
        }
        pattern.sort_unstable();
        row_patterns.push(pattern);
    }

    let mut col_counts = vec![1usize; n]; // diagonal
    for pat in &row_patterns {
        for &j in pat {
            col_counts[j] += 1;
        }
    }

    // Column-wise pattern: appending rows in ascending i keeps columns sorted.
    let mut l_col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        l_col_ptr[j + 1] = l_col_ptr[j] + (col_counts[j] - 1);
    }
    let nnz_strict = l_col_ptr[n];
    let mut l_row_idx = vec![0usize; nnz_strict];
    let mut next = l_col_ptr.clone();

    let mut row_ptr = vec![0usize; n + 1];
    for (i, pat) in row_patterns.iter().enumerate() {
        row_ptr[i + 1] = row_ptr[i] + pat.len();
    }
    let mut row_cols = vec![0usize; nnz_strict];
    let mut row_pos = vec![0usize; nnz_strict];
    for (i, pat) in row_patterns.iter().enumerate() {
        let base = row_ptr[i];
        for (k, &j) in pat.iter().enumerate() {
            let p = next[j];
            next[j] += 1;
            l_row_idx[p] = i;
            row_cols[base + k] = j;
            row_pos[base + k] = p;
        }
    }

    EliminationTree {
        n,
        perm: perm.clone(),
        parent,
        col_counts,
        l_col_ptr,
        l_row_idx,
        row_ptr,
        row_cols,
        row_pos,
    }
}

impl EliminationTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    /// Parent of column `j` in the elimination tree, [`NO_PARENT`] for roots.
    pub fn parent(&self, j: usize) -> usize {
        self.parent[j]
    }

    /// Nonzeros in column `j` of L, diagonal included.
    pub fn col_count(&self, j: usize) -> usize {
        self.col_counts[j]
    }

    /// Total nonzeros of L, diagonal included.
    pub fn nnz_l(&self) -> usize {
        self.l_col_ptr[self.n] + self.n
    }

    /// Strictly-lower pattern of column `j` (ascending permuted rows).
    pub fn col_pattern(&self, j: usize) -> &[usize] {
        &self.l_row_idx[self.l_col_ptr[j]..self.l_col_ptr[j + 1]]
    }

    pub(crate) fn col_storage_range(&self, j: usize) -> std::ops::Range<usize> {
        self.l_col_ptr[j]..self.l_col_ptr[j + 1]
    }

    /// Flat strictly-lower row-index array the storage positions index into.
    pub(crate) fn l_rows(&self) -> &[usize] {
        &self.l_row_idx
    }

    /// Columns `j < i` of row `i`'s pattern (ascending) with their storage
    /// positions in the column-wise value array.
    pub(crate) fn row_pattern(&self, i: usize) -> (&[usize], &[usize]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.row_cols[r.clone()], &self.row_pos[r])
    }

    pub(crate) fn nnz_strict_lower(&self) -> usize {
        self.l_col_ptr[self.n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> SparseSymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, 1.0));
            }
        }
        SparseSymMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn diagonal_matrix_is_all_roots() {
        let m =
            SparseSymMatrix::from_triplets(4, &(0..4).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
                .unwrap();
        let sym = symbolic_analyze(&m, &Permutation::identity(4));
        for j in 0..4 {
            assert_eq!(sym.parent(j), NO_PARENT);
            assert_eq!(sym.col_count(j), 1);
        }
    }

    #[test]
    fn tridiagonal_chain() {
        let sym = symbolic_analyze(&tridiagonal(4), &Permutation::identity(4));
        assert_eq!(sym.parent(0), 1);
        assert_eq!(sym.parent(1), 2);
        assert_eq!(sym.parent(2), 3);
        assert_eq!(sym.parent(3), NO_PARENT);
        assert_eq!(
            (0..4).map(|j| sym.col_count(j)).collect::<Vec<_>>(),
            vec![2, 2, 2, 1]
        );
    }

    #[test]
    fn dense_matrix_fills_completely() {
        let n = 5;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                t.push((i, j, if i == j { 10.0 } else { 1.0 }));
            }
        }
        let m = SparseSymMatrix::from_triplets(n, &t).unwrap();
        let sym = symbolic_analyze(&m, &Permutation::identity(n));
        for j in 0..n {
            assert_eq!(sym.col_count(j), n - j);
            if j + 1 < n {
                assert_eq!(sym.parent(j), j + 1);
            }
        }
    }

    #[test]
    fn row_and_column_views_agree() {
        // Random-ish sparse pattern with some fill.
        let m = SparseSymMatrix::from_triplets(
            6,
            &[
                (0, 0, 4.0),
                (1, 1, 4.0),
                (2, 2, 4.0),
                (3, 3, 4.0),
                (4, 4, 4.0),
                (5, 5, 4.0),
                (2, 0, 1.0),
                (3, 1, 1.0),
                (4, 2, 1.0),
                (4, 3, 1.0),
                (5, 0, 1.0),
            ],
        )
        .unwrap();
        let sym = symbolic_analyze(&m, &Permutation::identity(6));
        let mut from_rows = vec![Vec::new(); 6];
        for i in 0..6 {
            let (cols, _) = sym.row_pattern(i);
            for &j in cols {
                from_rows[j].push(i);
            }
        }
        for (j, rows) in from_rows.iter().enumerate() {
            assert_eq!(rows.as_slice(), sym.col_pattern(j));
        }
        assert_eq!(sym.nnz_l(), sym.nnz_strict_lower() + 6);
    }
}
