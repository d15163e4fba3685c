//! Generators and dense oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wpdgmres::linalg::{CsrMatrix, DenseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(a.n_rows(), a.n_cols(), a.values())
}

pub fn csr_to_na(a: &CsrMatrix) -> DMatrix<f64> {
    to_na(&a.to_dense())
}

pub fn na_to_csr(x: &DMatrix<f64>) -> CsrMatrix {
    let rows: Vec<Vec<f64>> = (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| x[(i, j)]).collect())
        .collect();
    CsrMatrix::from_dense(&DenseMatrix::from_rows(&rows))
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Dense spd matrix `G G^T / n + I`, exactly symmetric.
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let m = &g * g.transpose() / n as f64 + DMatrix::<f64>::identity(n, n);
    (&m + m.transpose()) * 0.5
}

/// Dense skew matrix with entries of size `scale`, exactly skew.
pub fn random_skew(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let s = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&s - s.transpose()) * (0.5 * scale)
}

/// Random positive definite `A = M + N` returned as `(A, M, N)`.
pub fn random_pd(n: usize, skew: f64, rng: &mut ChaCha8Rng) -> (CsrMatrix, CsrMatrix, CsrMatrix) {
    let m = random_spd(n, rng);
    let k = random_skew(n, skew, rng);
    (na_to_csr(&(&m + &k)), na_to_csr(&m), na_to_csr(&k))
}

/// Sparse spd tridiagonal-plus-random-band matrix.
pub fn sparse_spd(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
        if i + 1 < n {
            let v = rng.gen_range(-1.0..1.0);
            t.push((i, i + 1, v));
            t.push((i + 1, i, v));
        }
        if i + 3 < n {
            let v = rng.gen_range(-0.5..0.5);
            t.push((i, i + 3, v));
            t.push((i + 3, i, v));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let x = csr_to_na(a)
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular");
    x.iter().copied().collect()
}

/// Reference GMRES: change of variables `x^ = L^T x` with `W = L L^T`, basis
/// re-orthonormalized by Householder QR at every step, minimal residual as the
/// orthogonal complement of `range(B^ Q)`. Returns `||r_i||_W` for
/// `i = 0..=iters`, `B = A H`, zero start.
pub fn reference_gmres(
    a: &DMatrix<f64>,
    h: &DMatrix<f64>,
    w: &DMatrix<f64>,
    b: &DVector<f64>,
    iters: usize,
) -> Vec<f64> {
    let l = w.clone().cholesky().expect("W spd").l();
    let lt = l.transpose();
    let lt_inv = lt.clone().try_inverse().expect("invertible");
    let bh = &lt * (a * h) * &lt_inv;
    let rh = &lt * b;
    let n = b.len();
    let mut hist = vec![rh.norm()];
    let mut q = DMatrix::<f64>::zeros(n, 0);
    let mut next = rh.clone() / rh.norm();
    for i in 1..=iters {
        q = q.insert_column(i - 1, 0.0);
        q.set_column(i - 1, &next);
        let qr = q.clone().qr();
        q = qr.q().columns(0, i).into_owned();
        let bq = &bh * &q;
        // residual of the least-squares problem = component of rh orthogonal to range(bq)
        let qb = bq.qr().q();
        let res = &rh - &qb * (qb.transpose() * &rh);
        hist.push(res.norm());
        next = &bh * q.column(i - 1);
        for _ in 0..2 {
            let c = q.transpose() * &next;
            next -= &q * c;
        }
        let nn = next.norm();
        if nn == 0.0 {
            break;
        }
        next /= nn;
    }
    hist
}
