//! Dense pencil solver: Cholesky congruence to a skew-symmetric matrix,
//! Householder reduction to skew tridiagonal form, and a real symmetric
//! tridiagonal eigensolve.

use crate::error::{Error, Result};
use crate::eigenpencil::{
    collect_pairs, make_pair, zero_diagonal_tridiagonal_eigen, PencilEigenSet,
};
use crate::linalg::{sparse_cholesky, ComplexVector, CsrMatrix};

/// Largest dimension accepted by [`pencil_dense`].
pub const DENSE_SIZE_CAP: usize = 2000;

/// Householder reflector `I - beta v v^T` acting on indices `offset..`.
struct Reflector {
    offset: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let tail = &mut x[self.offset..];
        let s: f64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let s = self.beta * s;
        for (t, &vi) in tail.iter_mut().zip(&self.v) {
            *t -= s * vi;
        }
    }
}

/// Reduces the dense skew-symmetric row-major `a` (n x n) to tridiagonal form
/// `Q^T a Q`. Returns the sub-diagonal and the reflectors whose product
/// (in order) is `Q`.
fn skew_tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<Reflector>) {
    let mut e = Vec::with_capacity(n.saturating_sub(1));
    let mut reflectors = Vec::new();
    let mut p = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        let r0 = j + 1;
        let len = n - r0;
        let x: Vec<f64> = (r0..n).map(|i| a[i * n + j]).collect();
        let tail_norm: f64 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if tail_norm == 0.0 {
            e.push(x[0]);
            continue;
        }
        let norm = x[0].hypot(tail_norm);
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        let beta = 2.0 / vtv;
        e.push(alpha);
        // p = beta * A22 v
        for (ii, i) in (r0..n).enumerate() {
            let row = &a[i * n + r0..i * n + n];
            p[ii] = beta * row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        // A22 += v p^T - p v^T
        for ii in 0..len {
            let (vi, pi) = (v[ii], p[ii]);
            let row = &mut a[(r0 + ii) * n + r0..(r0 + ii) * n + n];
            for (jj, entry) in row.iter_mut().enumerate() {
                *entry += vi * p[jj] - pi * v[jj];
            }
        }
        reflectors.push(Reflector { offset: r0, v, beta });
    }
    (e, reflectors)
}

/// Computes the `k` eigenpairs of largest `|mu|` of `N z = i mu M z` by a
/// dense reduction. If `k` splits a conjugate pair, the partner is included.
pub fn pencil_dense(n_mat: &CsrMatrix, m: &CsrMatrix, k: usize) -> Result<PencilEigenSet> {
    let n = m.n_rows();
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.n_rows(), cols: m.n_cols() });
    }
    if n_mat.n_rows() != n || n_mat.n_cols() != n {
        return Err(Error::DimensionMismatch {
            context: "pencil_dense",
            expected: n,
            found: n_mat.n_rows(),
        });
    }
    if !n_mat.is_skew_symmetric() {
        return Err(Error::InvalidArgument("N is not skew-symmetric".into()));
    }
    if n > DENSE_SIZE_CAP {
        return Err(Error::InvalidArgument(format!(
            "dense pencil limited to {DENSE_SIZE_CAP} unknowns, got {n}"
        )));
    }
    let factor = sparse_cholesky(m)?;
    let k = k.min(n);
    if k == 0 {
        return Ok(PencilEigenSet { pairs: Vec::new(), k });
    }
    let perm = factor.permutation();

    // X = L^{-1} (P N P^T), one column at a time; stored by columns.
    let nd = n_mat.to_dense();
    let mut x = vec![0.0; n * n];
    for j in 0..n {
        let col = &mut x[j * n..(j + 1) * n];
        for i in 0..n {
            col[i] = nd.get(perm[i], perm[j]);
        }
        factor.solve_lower_in_place(col);
    }
    drop(nd);
    // S = X L^{-T} = (L^{-1} X^T)^T: row i of S is L^{-1} applied to row i of X.
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut s[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] = x[j * n + i];
        }
        factor.solve_lower_in_place(row);
    }
    drop(x);
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (s[i * n + j], s[j * n + i]);
            defect = defect.max((a + b).abs());
            scale = scale.max(a.abs().max(b.abs()));
            let avg = 0.5 * (a - b);
            s[i * n + j] = avg;
            s[j * n + i] = -avg;
        }
        s[i * n + i] = 0.0;
    }
    log::debug!("pencil_dense: congruence skew defect {defect:.2e} (scale {scale:.2e})");

    let (e, reflectors) = skew_tridiagonalize(&mut s, n);
    drop(s);
    let (values, vectors) = zero_diagonal_tridiagonal_eigen(&e);
    let lifted = collect_pairs(&values, &vectors, k, |re, im| {
        let mut ur = re.to_vec();
        let mut ui = im.to_vec();
        for r in reflectors.iter().rev() {
            r.apply(&mut ur);
            r.apply(&mut ui);
        }
        ComplexVector::new(factor.apply_inv_lt(&ur), factor.apply_inv_lt(&ui))
    });
    let pairs = lifted
        .into_iter()
        .map(|(mu, z)| make_pair(n_mat, m, mu, z))
        .collect();
    Ok(PencilEigenSet { pairs, k })
}
