//! Compressed sparse-column storage for symmetric matrices.
//!
//! Both triangles are stored explicitly so that column access doubles as row
//! access; the lower triangle is authoritative when the two could disagree
//! (construction rejects conflicting values). Every column carries its
//! diagonal entry, and zeros that were part of the constructed pattern are
//! retained as stored slots — sparsity decisions are made only when a pattern
//! is built, never during numeric updates.

use std::io::{BufRead, Write};

use crate::error::SparseError;

/// Symmetric sparse matrix in compressed sparse-column form.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    /// Storage position of the diagonal entry of each column.
    diag_pos: Vec<usize>,
    /// For entry p holding (i, j), `mirror_pos[p]` holds (j, i).
    mirror_pos: Vec<usize>,
}

impl SparseSymMatrix {
    /// Assemble from (row, col, value) triplets.
    ///
    /// Duplicate entries are summed. If only one triangle is supplied the
    /// other is mirrored; if both are supplied they must agree. Diagonal
    /// slots are always present, inserted as explicit zeros when missing.
    pub fn from_triplets(
        n: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        for &(r, c, _) in entries {
            if r >= n || c >= n {
                return Err(SparseError::IndexOutOfRange { row: r, col: c, n });
            }
        }

        // Sum duplicates per (col, row).
        let mut items: Vec<(usize, usize, f64)> =
            entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        items.sort_unstable_by_key(|&(c, r, _)| (c, r));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(items.len());
        for (c, r, v) in items {
            match merged.last_mut() {
                Some(last) if last.0 == c && last.1 == r => last.2 += v,
                _ => merged.push((c, r, v)),
            }
        }

        // Check symmetry of supplied entries; collect missing mirrors.
        let mut mirrors: Vec<(usize, usize, f64)> = Vec::new();
        for &(c, r, v) in &merged {
            if r == c {
                continue;
            }
            match merged.binary_search_by_key(&(r, c), |&(mc, mr, _)| (mc, mr)) {
                Ok(p) => {
                    let w = merged[p].2;
                    let scale = 1.0_f64.max(v.abs()).max(w.abs());
                    if (v - w).abs() > 1e-12 * scale {
                        return Err(SparseError::AsymmetricValue {
                            row: r,
                            col: c,
                            lower: if r > c { v } else { w },
                            upper: if r > c { w } else { v },
                        });
                    }
                }
                // Mirror of (r, c) stored as (col=r, row=c).
                Err(_) => mirrors.push((r, c, v)),
            }
        }
        merged.extend(mirrors);

        // Explicit diagonal slot in every column.
        let mut has_diag = vec![false; n];
        for &(c, r, _) in &merged {
            if c == r {
                has_diag[c] = true;
            }
        }
        for (j, present) in has_diag.iter().enumerate() {
            if !present {
                merged.push((j, j, 0.0));
            }
        }
        merged.sort_unstable_by_key(|&(c, r, _)| (c, r));

        let mut col_ptr = vec![0usize; n + 1];
        for &(c, _, _) in &merged {
            col_ptr[c + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx: Vec<usize> = merged.iter().map(|&(_, r, _)| r).collect();
        let values: Vec<f64> = merged.iter().map(|&(_, _, v)| v).collect();

        Ok(Self::from_parts(n, col_ptr, row_idx, values))
    }

    /// Build from already-canonical CSC arrays: full symmetric pattern,
    /// sorted row indices, diagonal present in every column.
    pub(crate) fn from_parts(
        n: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(col_ptr.len(), n + 1);
        debug_assert_eq!(row_idx.len(), values.len());

        let mut diag_pos = vec![usize::MAX; n];
        for j in 0..n {
            for p in col_ptr[j]..col_ptr[j + 1] {
                debug_assert!(p + 1 == col_ptr[j + 1] || row_idx[p] < row_idx[p + 1]);
                if row_idx[p] == j {
                    diag_pos[j] = p;
                }
            }
            debug_assert_ne!(diag_pos[j], usize::MAX, "missing diagonal in column {j}");
        }

        // Mirror positions via a per-column cursor sweep: visiting columns in
        // order, the transposed partner of each sub-diagonal entry is the next
        // unpaired super-diagonal entry of the partner column.
        let mut mirror_pos = vec![usize::MAX; row_idx.len()];
        let mut cursor = col_ptr.clone();
        for j in 0..n {
            for p in col_ptr[j]..col_ptr[j + 1] {
                let i = row_idx[p];
                if i < j {
                    continue;
                }
                if i == j {
                    mirror_pos[p] = p;
                    continue;
                }
                // (i, j) with i > j pairs with the cursor entry of column i,
                // which must be (j, i).
                let q = cursor[i];
                debug_assert_eq!(row_idx[q], j, "asymmetric pattern at ({i}, {j})");
                mirror_pos[p] = q;
                mirror_pos[q] = p;
                cursor[i] += 1;
            }
            // Skip this column's own processed upper part.
            cursor[j] = col_ptr[j + 1];
        }

        Self {
            n,
            col_ptr,
            row_idx,
            values,
            diag_pos,
            mirror_pos,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries, both triangles plus diagonal.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Stored entries of the lower triangle including the diagonal.
    pub fn nnz_lower(&self) -> usize {
        (self.nnz() + self.n) / 2
    }

    /// Stored slots whose value is exactly zero (retained pattern slots).
    pub fn explicit_zero_count(&self) -> usize {
        self.values.iter().filter(|v| **v == 0.0).count()
    }

    pub fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        self.col_ptr[j]..self.col_ptr[j + 1]
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_range(j);
        (&self.row_idx[r.clone()], &self.values[r])
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.values[self.diag_pos[j]]
    }

    /// Entry (i, j), zero when outside the stored pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.col_range(j);
        match self.row_idx[r.clone()].binary_search(&i) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// Overwrite column `j` and its mirrored row with `new_values`, which
    /// must cover exactly the stored pattern of the column.
    pub fn set_col_sym(&mut self, j: usize, new_values: &[f64]) {
        let r = self.col_range(j);
        assert_eq!(new_values.len(), r.len(), "pattern mismatch in column {j}");
        for (off, p) in r.enumerate() {
            self.values[p] = new_values[off];
            self.values[self.mirror_pos[p]] = new_values[off];
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for p in self.col_range(j) {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
    }

    /// Quadratic form xᵀ A x over the stored pattern.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            let mut s = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                s += v * x[i];
            }
            acc += s * xj;
        }
        acc
    }

    /// Dense copy, mostly for oracles and small problems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for p in self.col_range(j) {
                m[(self.row_idx[p], j)] = self.values[p];
            }
        }
        m
    }

    /// True when both matrices store exactly the same index pattern.
    pub fn same_pattern(&self, other: &Self) -> bool {
        self.n == other.n && self.col_ptr == other.col_ptr && self.row_idx == other.row_idx
    }

    /// Write MatrixMarket coordinate format (symmetric, 1-based, lower
    /// triangle).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<(), SparseError> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz_lower())?;
        for j in 0..self.n {
            for p in self.col_range(j) {
                let i = self.row_idx[p];
                if i >= j {
                    writeln!(w, "{} {} {:.17e}", i + 1, j + 1, self.values[p])?;
                }
            }
        }
        Ok(())
    }

    /// Read MatrixMarket coordinate format (symmetric, 1-based).
    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self, SparseError> {
        let mut lines = r.lines().enumerate();
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| SparseError::matrix_market(0, "empty file"))?;
        let header = header?;
        let lowered = header.to_lowercase();
        if !lowered.starts_with("%%matrixmarket matrix coordinate real symmetric") {
            return Err(SparseError::matrix_market(
                line_no + 1,
                "expected header '%%MatrixMarket matrix coordinate real symmetric'",
            ));
        }

        let mut dims: Option<(usize, usize)> = None;
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (line_no, line) in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            if dims.is_none() {
                let n: usize = parse_field(&mut fields, line_no)?;
                let m: usize = parse_field(&mut fields, line_no)?;
                let _nnz: usize = parse_field(&mut fields, line_no)?;
                if n != m {
                    return Err(SparseError::matrix_market(line_no + 1, "matrix not square"));
                }
                dims = Some((n, m));
                triplets.reserve(_nnz);
            } else {
                let i: usize = parse_field(&mut fields, line_no)?;
                let j: usize = parse_field(&mut fields, line_no)?;
                let v: f64 = parse_field(&mut fields, line_no)?;
                if i == 0 || j == 0 {
                    return Err(SparseError::matrix_market(line_no + 1, "indices are 1-based"));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
        let (n, _) = dims.ok_or_else(|| SparseError::matrix_market(0, "missing size line"))?;
        Self::from_triplets(n, &triplets)
    }
}

fn parse_field<'a, T: std::str::FromStr>(
    fields: &mut impl Iterator<Item = &'a str>,
    line_no: usize,
) -> Result<T, SparseError> {
    fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| SparseError::matrix_market(line_no + 1, "malformed entry"))
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default)]
pub struct SparseVector {
    idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseVector {
    pub fn new(pairs: Vec<(usize, f64)>) -> Result<Self, SparseError> {
        let mut pairs = pairs;
        pairs.sort_unstable_by_key(|&(i, _)| i);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SparseError::DuplicateIndex { index: w[0].0 });
            }
        }
        Ok(Self {
            idx: pairs.iter().map(|&(i, _)| i).collect(),
            vals: pairs.iter().map(|&(_, v)| v).collect(),
        })
    }

    /// Build from pairs already sorted by strictly increasing index.
    pub(crate) fn from_sorted(pairs: Vec<(usize, f64)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        Self {
            idx: pairs.iter().map(|&(i, _)| i).collect(),
            vals: pairs.iter().map(|&(_, v)| v).collect(),
        }
    }

    /// Nonzero entries of a dense slice.
    pub fn from_dense(x: &[f64]) -> Self {
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                idx.push(i);
                vals.push(v);
            }
        }
        Self { idx, vals }
    }

    pub fn unit(i: usize) -> Self {
        Self {
            idx: vec![i],
            vals: vec![1.0],
        }
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().copied().zip(self.vals.iter().copied())
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * x[i]).sum()
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}
