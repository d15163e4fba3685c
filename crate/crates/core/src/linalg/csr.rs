//! Compressed sparse row storage and the Hermitian / skew-Hermitian splitting.

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;

/// Real sparse matrix in CSR format.
///
/// Column indices are strictly increasing within every row, so the
/// summation order of [`CsrMatrix::spmv`] is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn try_new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidStructure("row_offsets[0] != 0".into()));
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return Err(Error::InvalidStructure(
                "row_offsets[n_rows], col_indices and values disagree on nnz".into(),
            ));
        }
        for i in 0..n_rows {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            if start > end {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decreases at row {i}"
                )));
            }
            let cols = &col_indices[start..end];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(Error::InvalidStructure(format!(
                        "column index {c} out of range in row {i}"
                    )));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// in input order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable sort keeps duplicate summation in input order
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self::try_new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Keeps the entries of `dense` that are not exactly zero.
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut trip = Vec::new();
        for i in 0..dense.n_rows() {
            for j in 0..dense.n_cols() {
                let v = dense.get(i, j);
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dense.n_rows(), dense.n_cols(), &trip)
            .expect("dense matrix yields valid triplets")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// `y = A x`, summing each row in ascending column order.
    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        y
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "spmv: x has wrong length");
        assert_eq!(y.len(), self.n_rows, "spmv: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                s += self.values[k] * x[self.col_indices[k]];
            }
            *yi = s;
        }
    }

    /// Checked variant of [`CsrMatrix::spmv`].
    pub fn try_spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmv",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        Ok(self.spmv(x))
    }

    /// `y = A^T x`
    pub fn spmv_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows, "spmv_transpose: x has wrong length");
        let mut y = vec![0.0; self.n_cols];
        for (i, &xi) in x.iter().enumerate() {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                y[self.col_indices[k]] += self.values[k] * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                let dst = next[j];
                col_indices[dst] = i;
                values[dst] = self.values[k];
                next[j] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// `alpha * self + beta * other` over the union pattern.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                context: "add_scaled",
                expected: self.n_rows * self.n_cols,
                found: other.n_rows * other.n_cols,
            });
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] <= cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] <= ca[p]);
                if take_a && take_b {
                    col_indices.push(ca[p]);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                } else if take_a {
                    col_indices.push(ca[p]);
                    values.push(alpha * va[p]);
                    p += 1;
                } else {
                    col_indices.push(cb[q]);
                    values.push(beta * vb[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// Removes stored entries equal to zero.
    pub fn pruned(&self) -> Self {
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if x != 0.0 {
                    col_indices.push(j);
                    values.push(x);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Principal submatrix `R A R^T` for the sorted index set `idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n_cols];
        for (k, &g) in idx.iter().enumerate() {
            local[g] = k;
        }
        let mut row_offsets = Vec::with_capacity(idx.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &g in idx {
            let (c, v) = self.row(g);
            let mut entries: Vec<(usize, f64)> = c
                .iter()
                .zip(v)
                .filter(|(j, _)| local[**j] != usize::MAX)
                .map(|(j, x)| (local[*j], *x))
                .collect();
            entries.sort_by_key(|e| e.0);
            for (j, x) in entries {
                col_indices.push(j);
                values.push(x);
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n_rows: idx.len(),
            n_cols: idx.len(),
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Whether `A^T = A` holds entry by entry, exactly.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose_canonical()
    }

    /// Whether `A^T = -A` holds entry by entry, exactly.
    pub fn is_skew_symmetric(&self) -> bool {
        self.is_square() && self.pruned() == self.transpose_canonical().scaled(-1.0).pruned()
    }

    fn transpose_canonical(&self) -> Self {
        self.transpose()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                d.set(i, j, x);
            }
        }
        d
    }

    /// Sparse times dense: `A X`.
    pub fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.n_rows(), self.n_cols, "mul_dense: inner dimension mismatch");
        let mut out = DenseMatrix::zeros(self.n_rows, x.n_cols());
        for j in 0..x.n_cols() {
            self.spmv_into(x.column(j), out.column_mut(j));
        }
        out
    }
}

/// Splits a square matrix into its symmetric part `M = (A + A^T)/2` and its
/// skew-symmetric part `N = (A - A^T)/2`.
///
/// Symmetry of `M` and skewness of `N` hold exactly: each off-diagonal pair is
/// computed once and mirrored, and the diagonal of `N` is never stored.
pub fn split_hermitian_skew(a: &CsrMatrix) -> Result<(CsrMatrix, CsrMatrix)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    let n = a.n_rows();
    let at = a.transpose();
    let mut m_trip = Vec::new();
    let mut n_trip = Vec::new();
    for i in 0..n {
        // union of the patterns of row i of A and of A^T, upper triangle only
        let (ca, va) = a.row(i);
        let (ct, vt) = at.row(i);
        let (mut p, mut q) = (0, 0);
        while p < ca.len() || q < ct.len() {
            let ja = ca.get(p).copied().unwrap_or(usize::MAX);
            let jt = ct.get(q).copied().unwrap_or(usize::MAX);
            let j = ja.min(jt);
            let aij = if ja == j { va[p] } else { 0.0 };
            let aji = if jt == j { vt[q] } else { 0.0 };
            if ja == j {
                p += 1;
            }
            if jt == j {
                q += 1;
            }
            if j < i {
                continue;
            }
            if j == i {
                if aij != 0.0 {
                    m_trip.push((i, i, aij));
                }
                continue;
            }
            let sym = 0.5 * (aij + aji);
            let skew = 0.5 * (aij - aji);
            if sym != 0.0 {
                m_trip.push((i, j, sym));
                m_trip.push((j, i, sym));
            }
            if skew != 0.0 {
                n_trip.push((i, j, skew));
                n_trip.push((j, i, -skew));
            }
        }
    }
    Ok((
        CsrMatrix::from_triplets(n, n, &m_trip)?,
        CsrMatrix::from_triplets(n, n, &n_trip)?,
    ))
}
