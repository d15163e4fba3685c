//! Eigenpairs of the pencil `N z = lambda M z` with `M` spd and `N`
//! skew-symmetric. All eigenvalues are purely imaginary, `lambda = i mu`, and
//! nonzero ones come in conjugate pairs `(mu, z)`, `(-mu, conj z)`.

mod basis;
mod dense;
mod lanczos;

pub use basis::{real_deflation_basis, tau_of, Tau};
pub use dense::{pencil_dense, DENSE_SIZE_CAP};
pub use lanczos::{pencil_lanczos, LanczosOptions};

use crate::linalg::vector::{cdot, norm2};
use crate::linalg::{ComplexVector, CsrMatrix};

#[derive(Debug, Clone)]
pub struct PencilEigenPair {
    /// Imaginary part of the eigenvalue `lambda = i mu`.
    pub mu: f64,
    pub vector: ComplexVector,
    /// `||N z - i mu M z|| / ||z||_M`
    pub residual: f64,
    /// `|z^H M z - 1|`
    pub m_norm_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PencilEigenSet {
    /// Sorted by `|mu|` descending.
    pub pairs: Vec<PencilEigenPair>,
    /// Number of pairs requested.
    pub k: usize,
}

impl PencilEigenSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.mu).collect()
    }

    /// Largest `|mu|`, i.e. the spectral radius of `M^{-1} N` when the set
    /// holds the dominant pairs.
    pub fn spectral_radius(&self) -> f64 {
        self.pairs.first().map_or(0.0, |p| p.mu.abs())
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    /// Largest `|z_i^H M z_j|` over `i != j`.
    pub fn max_m_orthogonality_error(&self, m: &CsrMatrix) -> f64 {
        let mz: Vec<ComplexVector> = self.pairs.iter().map(|p| m_times(m, &p.vector)).collect();
        let mut worst = 0.0f64;
        for i in 0..self.pairs.len() {
            for (j, mzj) in mz.iter().enumerate() {
                if i != j {
                    let (re, im) = cdot(&self.pairs[i].vector, mzj);
                    worst = worst.max(re.hypot(im));
                }
            }
        }
        worst
    }

    /// Text table with columns `index mu residual`.
    pub fn to_table(&self) -> String {
        let mut s = String::from("index mu residual\n");
        for (i, p) in self.pairs.iter().enumerate() {
            s.push_str(&format!("{} {:.16e} {:.3e}\n", i + 1, p.mu, p.residual));
        }
        s
    }
}

pub(crate) fn m_times(m: &CsrMatrix, z: &ComplexVector) -> ComplexVector {
    ComplexVector::new(m.spmv(&z.re), m.spmv(&z.im))
}

/// Fills in `residual` and `m_norm_error` for a pair `(mu, z)`.
pub(crate) fn make_pair(n: &CsrMatrix, m: &CsrMatrix, mu: f64, z: ComplexVector) -> PencilEigenPair {
    let mz = m_times(m, &z);
    let (q, _) = cdot(&z, &mz);
    let nre = n.spmv(&z.re);
    let nim = n.spmv(&z.im);
    // N z - i mu M z
    let rre: Vec<f64> = nre.iter().zip(&mz.im).map(|(a, b)| a + mu * b).collect();
    let rim: Vec<f64> = nim.iter().zip(&mz.re).map(|(a, b)| a - mu * b).collect();
    let res = norm2(&rre).hypot(norm2(&rim));
    PencilEigenPair {
        mu,
        vector: z,
        residual: res / q.max(0.0).sqrt().max(f64::MIN_POSITIVE),
        m_norm_error: (q - 1.0).abs(),
    }
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with zero
/// diagonal and off-diagonal `e`. Returns eigenvalues ascending and the
/// matching eigenvectors as columns.
pub(crate) fn zero_diagonal_tridiagonal_eigen(e: &[f64]) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let n = e.len() + 1;
    let mut j = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (k, &ek) in e.iter().enumerate() {
        j[(k + 1, k)] = ek;
        j[(k, k + 1)] = ek;
    }
    let eig = nalgebra::SymmetricEigen::new(j);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = nalgebra::DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `D w` with `D = diag(i^k)`, returned as separate real and imaginary parts.
pub(crate) fn rotate_phases(w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; w.len()];
    let mut im = vec![0.0; w.len()];
    for (k, &x) in w.iter().enumerate() {
        match k % 4 {
            0 => re[k] = x,
            1 => im[k] = x,
            2 => re[k] = -x,
            _ => im[k] = -x,
        }
    }
    (re, im)
}

/// Orders Ritz/eigen data of a skew tridiagonal matrix with sub-diagonal `e`
/// into pencil pairs. `lift` maps a phase-rotated tridiagonal eigenvector
/// `(re, im)` to the pencil eigenvector. Only the first `k` entries
/// (rounded up to complete a conjugate pair) are lifted.
pub(crate) fn collect_pairs(
    values: &[f64],
    vectors: &nalgebra::DMatrix<f64>,
    k: usize,
    mut lift: impl FnMut(&[f64], &[f64]) -> ComplexVector,
) -> Vec<(f64, ComplexVector)> {
    let rho = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let thr = 1e-12 * rho;
    let mut out = Vec::new();
    let column = |c: usize| -> Vec<f64> { vectors.column(c).iter().copied().collect() };
    // J w = nu w  gives mu = -nu; nu ascending means |mu| descending for nu < 0.
    for (c, &nu) in values.iter().enumerate() {
        if out.len() >= k {
            break;
        }
        if nu < -thr {
            let (re, im) = rotate_phases(&column(c));
            let z = lift(&re, &im);
            let zc = z.conj();
            out.push((-nu, z));
            out.push((nu, zc));
        }
    }
    if out.len() < k {
        for (c, &nu) in values.iter().enumerate() {
            if out.len() >= k {
                break;
            }
            if nu.abs() <= thr {
                let (re, im) = rotate_phases(&column(c));
                out.push((0.0, lift(&re, &im)));
            }
        }
    }
    out
}
