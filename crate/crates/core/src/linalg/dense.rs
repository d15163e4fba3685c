//! Small dense matrices (column-major), LU with partial pivoting and a
//! column-pivoted QR used for rank checks.

use crate::error::{Error, Result};
use crate::linalg::vector::{dot, norm2};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_col_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::from_col_major",
                expected: n_rows * n_cols,
                found: values.len(),
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    /// Builds from row slices; handy in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(n_rows, n_cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n_cols, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_columns(n_rows: usize, cols: &[Vec<f64>]) -> Self {
        let mut values = Vec::with_capacity(n_rows * cols.len());
        for c in cols {
            assert_eq!(c.len(), n_rows, "column has wrong length");
            values.extend_from_slice(c);
        }
        Self {
            n_rows,
            n_cols: cols.len(),
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n_rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.n_rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows)
            .map(|i| (0..self.n_cols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for j in 0..self.n_cols {
            for i in 0..self.n_rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "mul_vec: length mismatch");
        let mut y = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.column(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// `A^T x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows, "tr_mul_vec: length mismatch");
        (0..self.n_cols).map(|j| dot(self.column(j), x)).collect()
    }

    /// `A B`
    pub fn matmul(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, b.n_rows, "matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.n_rows, b.n_cols);
        for j in 0..b.n_cols {
            let col = self.mul_vec(b.column(j));
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    }

    /// `A^T B`
    pub fn tr_matmul(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_rows, b.n_rows, "tr_matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.n_cols, b.n_cols);
        for j in 0..b.n_cols {
            for i in 0..self.n_cols {
                out.set(i, j, dot(self.column(i), b.column(j)));
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn norm1(&self) -> f64 {
        (0..self.n_cols)
            .map(|j| self.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Keeps the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> DenseMatrix {
        assert!(k <= self.n_cols);
        Self {
            n_rows: self.n_rows,
            n_cols: k,
            values: self.values[..k * self.n_rows].to_vec(),
        }
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.n_rows, other.n_rows);
        assert_eq!(self.n_cols, other.n_cols);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// LU factorization `P E = L U` of a square matrix with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
    rcond: f64,
}

impl LuFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Reciprocal 1-norm condition number, `1 / (||E||_1 ||E^-1||_1)`.
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "lu solve: rhs has wrong length");
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..n {
                    x[i] -= self.lu.get(i, j) * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu.get(j, j);
            let xj = x[j];
            if xj != 0.0 {
                for i in 0..j {
                    x[i] -= self.lu.get(i, j) * xj;
                }
            }
        }
        x
    }
}

/// Factorizes `e` with partial pivoting. An exactly zero pivot is reported as
/// [`Error::SingularCouplingBlock`].
pub fn dense_lu_factor(e: &DenseMatrix) -> Result<LuFactor> {
    if e.n_rows() != e.n_cols() {
        return Err(Error::NotSquare {
            rows: e.n_rows(),
            cols: e.n_cols(),
        });
    }
    let n = e.n_rows();
    let mut lu = e.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu.get(k, k).abs();
        for i in k + 1..n {
            let v = lu.get(i, k).abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::SingularCouplingBlock { rcond: 0.0 });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let tmp = lu.get(k, j);
                lu.set(k, j, lu.get(p, j));
                lu.set(p, j, tmp);
            }
        }
        let pivot = lu.get(k, k);
        for i in k + 1..n {
            let l = lu.get(i, k) / pivot;
            lu.set(i, k, l);
        }
        for j in k + 1..n {
            let ukj = lu.get(k, j);
            if ukj == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let v = lu.get(i, j) - lu.get(i, k) * ukj;
                lu.set(i, j, v);
            }
        }
    }
    let mut factor = LuFactor {
        n,
        lu,
        perm,
        rcond: 1.0,
    };
    if n > 0 {
        // explicit inverse: the coupling blocks are small
        let mut inv_norm1: f64 = 0.0;
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            let col = factor.solve(&unit);
            unit[j] = 0.0;
            inv_norm1 = inv_norm1.max(col.iter().map(|v| v.abs()).sum());
        }
        factor.rcond = 1.0 / (e.norm1() * inv_norm1);
        if !factor.rcond.is_finite() {
            factor.rcond = 0.0;
        }
    }
    Ok(factor)
}

pub fn dense_lu_solve(factor: &LuFactor, rhs: &[f64]) -> Vec<f64> {
    factor.solve(rhs)
}

/// Numerical rank from Householder QR with column pivoting.
///
/// Diagonal entries of `R` below `rel_tol * |R_00|` count as zero.
pub fn numerical_rank(a: &DenseMatrix, rel_tol: f64) -> usize {
    let (m, n) = (a.n_rows(), a.n_cols());
    if m == 0 || n == 0 {
        return 0;
    }
    let mut r = a.clone();
    let mut col_norms: Vec<f64> = (0..n).map(|j| norm2(r.column(j))).collect();
    let mut r00 = 0.0;
    let mut rank = 0;
    for k in 0..m.min(n) {
        // pivot the remaining column of largest norm into place
        let (p, &pn) = col_norms[k..]
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, v)| (i + k, v))
            .unwrap();
        if p != k {
            for i in 0..m {
                let tmp = r.get(i, k);
                r.set(i, k, r.get(i, p));
                r.set(i, p, tmp);
            }
            col_norms.swap(k, p);
        }
        let x: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
        let alpha = norm2(&x);
        if k == 0 {
            r00 = alpha;
        }
        if alpha == 0.0 || alpha <= rel_tol * r00 || pn == 0.0 {
            break;
        }
        rank += 1;
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x;
        v[0] += sign * alpha;
        let vnorm2 = dot(&v, &v);
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * r.get(i, j)).sum();
            let f = 2.0 * s / vnorm2;
            for i in k..m {
                let val = r.get(i, j) - f * v[i - k];
                r.set(i, j, val);
            }
        }
        for (j, cn) in col_norms.iter_mut().enumerate().skip(k + 1) {
            *cn = (k + 1..m).map(|i| r.get(i, j).powi(2)).sum::<f64>().sqrt();
        }
    }
    rank
}

/// Least-squares coefficients `C` minimizing `||B - A C||_F` via the normal
/// equations, for well-conditioned tall `A`.
pub fn least_squares(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let gram = a.tr_matmul(a);
    let lu = dense_lu_factor(&gram)?;
    let atb = a.tr_matmul(b);
    let mut c = DenseMatrix::zeros(a.n_cols(), b.n_cols());
    for j in 0..b.n_cols() {
        let col = lu.solve(atb.column(j));
        c.column_mut(j).copy_from_slice(&col);
    }
    Ok(c)
}
