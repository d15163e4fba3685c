//! Lanczos iteration for the `M`-skew-adjoint operator `K = M^{-1} N` in the
//! `M` inner product, with full reorthogonalization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eigenpencil::{
    collect_pairs, make_pair, zero_diagonal_tridiagonal_eigen, PencilEigenSet,
};
use crate::linalg::vector::{axpy, dot};
use crate::linalg::{CholeskyFactor, ComplexVector, CsrMatrix};

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Ritz residual tolerance relative to the spectral radius estimate.
    pub tol: f64,
    /// Maximal Krylov dimension.
    pub max_iters: usize,
    pub seed: u64,
    /// Ritz values are re-examined every this many steps.
    pub check_every: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 1000,
            seed: 0x5eed,
            check_every: 10,
        }
    }
}

/// Largest-`|mu|` eigenpairs of `N z = i mu M z` using a precomputed
/// Cholesky factor of `M`.
///
/// On hitting `max_iters` the converged subset is returned inside
/// [`Error::PartialConvergence`].
pub fn pencil_lanczos(
    m: &CsrMatrix,
    factor: &CholeskyFactor,
    n_mat: &CsrMatrix,
    k: usize,
    opts: &LanczosOptions,
) -> Result<PencilEigenSet> {
    let n = m.n_rows();
    if factor.dim() != n || n_mat.n_rows() != n || n_mat.n_cols() != n {
        return Err(Error::DimensionMismatch {
            context: "pencil_lanczos",
            expected: n,
            found: n_mat.n_rows(),
        });
    }
    if !n_mat.is_skew_symmetric() {
        return Err(Error::InvalidArgument("N is not skew-symmetric".into()));
    }
    let k = k.min(n);
    if k == 0 {
        return Ok(PencilEigenSet { pairs: Vec::new(), k });
    }
    let max_dim = opts.max_iters.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut m_basis: Vec<Vec<f64>> = Vec::new();
    let mut offdiag: Vec<f64> = Vec::new();

    let m_normalize = |v: &mut Vec<f64>, mv: &mut Vec<f64>| -> f64 {
        let nrm = dot(v, mv).max(0.0).sqrt();
        if nrm > 0.0 {
            v.iter_mut().for_each(|x| *x /= nrm);
            mv.iter_mut().for_each(|x| *x /= nrm);
        }
        nrm
    };

    // Orthogonalizes w against the current basis (two passes) in the M inner
    // product and returns (w, M w).
    let orthogonalize = |w: &mut Vec<f64>, basis: &[Vec<f64>], m_basis: &[Vec<f64>]| -> Vec<f64> {
        for _ in 0..2 {
            for (v, mv) in basis.iter().zip(m_basis) {
                let c = dot(w, mv);
                axpy(-c, v, w);
            }
        }
        m.spmv(w)
    };

    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut mstart = m.spmv(&start);
    m_normalize(&mut start, &mut mstart);
    basis.push(start);
    m_basis.push(mstart);

    let mut last_ritz: Option<(Vec<f64>, nalgebra::DMatrix<f64>)> = None;
    let mut converged = false;
    let mut steps = 0;
    while basis.len() <= max_dim {
        let j = basis.len() - 1;
        // w = K v_j + beta_{j-1} v_{j-1}
        let mut w = factor.apply_inverse(&n_mat.spmv(&basis[j]));
        if j > 0 {
            axpy(offdiag[j - 1], &basis[j - 1], &mut w);
        }
        let mut mw = orthogonalize(&mut w, &basis, &m_basis);
        let beta = dot(&w, &mw).max(0.0).sqrt();
        steps += 1;
        let dim = basis.len();
        let at_cap = dim == max_dim;
        let scale = offdiag.iter().fold(beta, |a, b| a.max(b.abs()));
        let breakdown = beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) || beta == 0.0;

        if dim >= 2 && (dim % opts.check_every == 0 || at_cap || breakdown) {
            let (vals, vecs) = zero_diagonal_tridiagonal_eigen(&offdiag);
            let rho = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let target = rho * opts.tol;
            // Ritz residual of pair c: |beta * w_last(c)|
            let mut order: Vec<usize> = (0..vals.len()).collect();
            order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
            let wanted = k.min(vals.len());
            let effective_beta = if breakdown { 0.0 } else { beta };
            converged = order[..wanted]
                .iter()
                .all(|&c| (effective_beta * vecs[(dim - 1, c)]).abs() <= target)
                && vals.len() >= k.min(n);
            last_ritz = Some((vals, vecs));
            if converged {
                break;
            }
        }
        if at_cap {
            break;
        }
        if breakdown {
            // Invariant subspace found; continue with a fresh direction.
            let mut fresh: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut mf = orthogonalize(&mut fresh, &basis, &m_basis);
            if m_normalize(&mut fresh, &mut mf) == 0.0 {
                break;
            }
            offdiag.push(0.0);
            basis.push(fresh);
            m_basis.push(mf);
        } else {
            m_normalize(&mut w, &mut mw);
            offdiag.push(beta);
            basis.push(w);
            m_basis.push(mw);
        }
    }
    if last_ritz.as_ref().map_or(true, |(v, _)| v.len() != basis.len()) {
        last_ritz = Some(if basis.len() == 1 {
            (vec![0.0], nalgebra::DMatrix::from_element(1, 1, 1.0))
        } else {
            zero_diagonal_tridiagonal_eigen(&offdiag)
        });
    }
    let (vals, vecs) = last_ritz.expect("ritz data");
    let lift = |re: &[f64], im: &[f64]| {
        let mut zr = vec![0.0; n];
        let mut zi = vec![0.0; n];
        for (v, (&a, &b)) in basis.iter().zip(re.iter().zip(im)) {
            axpy(a, v, &mut zr);
            axpy(b, v, &mut zi);
        }
        ComplexVector::new(zr, zi)
    };
    let lifted = collect_pairs(&vals, &vecs, k, lift);
    let pairs: Vec<_> = lifted
        .into_iter()
        .map(|(mu, z)| make_pair(n_mat, m, mu, z))
        .collect();
    if converged || basis.len() == n {
        Ok(PencilEigenSet { pairs, k })
    } else {
        let scale = pairs.first().map_or(0.0, |p| p.mu.abs());
        let good: Vec<_> = pairs
            .into_iter()
            .filter(|p| p.residual <= opts.tol.sqrt() * scale.max(1.0))
            .collect();
        Err(Error::PartialConvergence {
            partial: Box::new(PencilEigenSet { pairs: good, k }),
            requested: k,
            iterations: steps,
        })
    }
}
