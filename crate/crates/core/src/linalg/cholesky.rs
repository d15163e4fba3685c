//! Envelope (skyline) Cholesky factorization with reverse Cuthill–McKee
//! ordering.
//!
//! The factor satisfies `P M P^T = L L^T`, where `P` is the RCM permutation.
//! Row `i` of `L` is stored densely from its first structural nonzero up to
//! the diagonal, which is exact for the envelope of `P M P^T`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::csr::CsrMatrix;

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `inv_perm[old] = new`
    inv_perm: Vec<usize>,
    /// First stored column of each row of `L`.
    first: Vec<usize>,
    /// Offset of row `i` in `values`; entries run over columns `first[i]..=i`.
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries of `L`.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j >= self.first[i] && j <= i);
        self.values[self.offsets[i] + (j - self.first[i])]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Solves `L y = b` in place (permuted coordinates).
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let f = self.first[i];
            let row = self.row(i);
            let mut s = b[i];
            for (k, &lij) in row[..row.len() - 1].iter().enumerate() {
                s -= lij * b[f + k];
            }
            b[i] = s / row[row.len() - 1];
        }
    }

    /// Solves `L^T x = y` in place (permuted coordinates).
    pub fn solve_upper_in_place(&self, y: &mut [f64]) {
        for i in (0..self.n).rev() {
            let f = self.first[i];
            let row = self.row(i);
            let xi = y[i] / row[row.len() - 1];
            y[i] = xi;
            for (k, &lij) in row[..row.len() - 1].iter().enumerate() {
                y[f + k] -= lij * xi;
            }
        }
    }

    /// `P v`
    pub fn permute(&self, v: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&old| v[old]).collect()
    }

    /// `P^T v`
    pub fn unpermute(&self, v: &[f64]) -> Vec<f64> {
        self.inv_perm.iter().map(|&new| v[new]).collect()
    }

    /// `M^{-1} v`
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "apply_inverse: length mismatch");
        let mut w = self.permute(v);
        self.solve_lower_in_place(&mut w);
        self.solve_upper_in_place(&mut w);
        self.unpermute(&w)
    }

    /// `L^{-T} u` mapped back to original ordering: `P^T L^{-T} u`.
    pub fn apply_inv_lt(&self, u: &[f64]) -> Vec<f64> {
        let mut w = u.to_vec();
        self.solve_upper_in_place(&mut w);
        self.unpermute(&w)
    }

    /// `L^T P v`
    pub fn apply_lt(&self, v: &[f64]) -> Vec<f64> {
        let pv = self.permute(v);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let f = self.first[i];
            for (k, &lij) in self.row(i).iter().enumerate() {
                out[f + k] += lij * pv[i];
            }
        }
        out
    }

    /// Smallest diagonal entry of `L`.
    pub fn min_diagonal(&self) -> f64 {
        (0..self.n)
            .map(|i| self.l(i, i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Reverse Cuthill–McKee ordering of the symmetric pattern of `a`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n_rows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while order.len() < n {
        // next component: start from an unvisited node of minimum degree
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = a
                .row(u)
                .0
                .iter()
                .copied()
                .filter(|&v| !visited[v])
                .collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Factorizes a symmetric matrix. Fails with [`Error::NotPositiveDefinite`]
/// at the first non-positive pivot, which doubles as the spd test.
pub fn sparse_cholesky(m: &CsrMatrix) -> Result<CholeskyFactor> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.n_rows(),
            cols: m.n_cols(),
        });
    }
    let n = m.n_rows();
    let perm = reverse_cuthill_mckee(m);
    let mut inv_perm = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv_perm[old] = new;
    }

    // envelope of the permuted lower triangle
    let mut first: Vec<usize> = (0..n).collect();
    for (new_i, &old_i) in perm.iter().enumerate() {
        for &old_j in m.row(old_i).0 {
            let new_j = inv_perm[old_j];
            if new_j < first[new_i] {
                first[new_i] = new_j;
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for i in 0..n {
        offsets.push(offsets[i] + (i - first[i] + 1));
    }
    let mut values = vec![0.0; offsets[n]];
    for (new_i, &old_i) in perm.iter().enumerate() {
        let (cols, vals) = m.row(old_i);
        for (&old_j, &v) in cols.iter().zip(vals) {
            let new_j = inv_perm[old_j];
            if new_j <= new_i {
                values[offsets[new_i] + new_j - first[new_i]] = v;
            }
        }
    }

    for i in 0..n {
        let fi = first[i];
        for j in fi..i {
            let fj = first[j];
            let lo = fi.max(fj);
            let mut s = values[offsets[i] + j - fi];
            for k in lo..j {
                s -= values[offsets[i] + k - fi] * values[offsets[j] + k - fj];
            }
            values[offsets[i] + j - fi] = s / values[offsets[j] + j - fj];
        }
        let mut d = values[offsets[i] + i - fi];
        for k in fi..i {
            let v = values[offsets[i] + k - fi];
            d -= v * v;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: perm[i],
                value: d,
                subdomain: None,
            });
        }
        values[offsets[i] + i - fi] = d.sqrt();
    }

    Ok(CholeskyFactor {
        n,
        perm,
        inv_perm,
        first,
        offsets,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector::{norm2, sub};

    fn laplacian_2d(k: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| i * k + j;
        let mut t = Vec::new();
        for i in 0..k {
            for j in 0..k {
                t.push((idx(i, j), idx(i, j), 4.5));
                if i + 1 < k {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < k {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(k * k, k * k, &t).unwrap()
    }

    #[test]
    fn identity_factor() {
        let f = sparse_cholesky(&CsrMatrix::identity(4)).unwrap();
        assert_eq!(f.nnz(), 4);
        assert_eq!(f.min_diagonal(), 1.0);
        assert_eq!(f.apply_inverse(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn diagonal_factor() {
        let f = sparse_cholesky(&CsrMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(f.apply_inverse(&[4.0, 9.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn laplacian_residual() {
        let a = laplacian_2d(12);
        let f = sparse_cholesky(&a).unwrap();
        let v: Vec<f64> = (0..144).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let x = f.apply_inverse(&v);
        let r = sub(&a.spmv(&x), &v);
        assert!(norm2(&r) <= 1e-10 * norm2(&v));
        // L^T P is a square root: ||L^T P x||^2 = x^T M x
        let lt = f.apply_lt(&x);
        let quad: f64 = x.iter().zip(a.spmv(&x)).map(|(a, b)| a * b).sum();
        assert!((norm2(&lt).powi(2) - quad).abs() <= 1e-10 * quad);
    }

    #[test]
    fn indefinite_rejected() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        )
        .unwrap();
        assert!(matches!(
            sparse_cholesky(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rcm_is_permutation() {
        let a = laplacian_2d(5);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..25).collect::<Vec<_>>());
    }
}
