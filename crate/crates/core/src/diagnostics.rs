//! Convergence diagnostics: condition number of `H M`, the contraction
//! quantity theta (theoretical, measured, sampled) and the spectral radius
//! bound for the model problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deflation::DeflationPair;
use crate::error::{Error, Result};
use crate::gmres::SolveReport;
use crate::linalg::vector::{axpy, dot};
use crate::linalg::CsrMatrix;
use crate::operators::LinearOperator;

/// Slack used in every bound comparison.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub iterations: usize,
}

impl KappaEstimate {
    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

#[derive(Debug, Clone)]
pub struct KappaOptions {
    pub max_iter: usize,
    /// Relative change of both extreme Ritz values below which the iteration
    /// stops.
    pub stagnation: f64,
    pub seed: u64,
}

impl Default for KappaOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            stagnation: 1e-10,
            seed: 0xc0ffee,
        }
    }
}

/// Extreme Ritz values of `H M` from Lanczos in the `M` inner product, in
/// which `H M` is self-adjoint.
pub fn estimate_kappa_hm(h: &dyn LinearOperator, m: &CsrMatrix, opts: &KappaOptions) -> Result<KappaEstimate> {
    let n = m.n_rows();
    if h.dim() != n {
        return Err(Error::DimensionMismatch { context: "estimate_kappa_hm", expected: n, found: h.dim() });
    }
    if n < 2 {
        return Err(Error::InsufficientData("need at least two unknowns for a condition estimate".into()));
    }
    let max_iter = opts.max_iter.min(n).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_vec = || -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut m_basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let orthonormalize = |mut v: Vec<f64>, basis: &[Vec<f64>], m_basis: &[Vec<f64>]| -> Option<(Vec<f64>, Vec<f64>, f64)> {
        for _ in 0..2 {
            for (b, mb) in basis.iter().zip(m_basis) {
                let c = dot(&v, mb);
                axpy(-c, b, &mut v);
            }
        }
        let mv = m.spmv(&v);
        let nrm = dot(&v, &mv).max(0.0).sqrt();
        if nrm == 0.0 || !nrm.is_finite() {
            return None;
        }
        Some((v.iter().map(|x| x / nrm).collect(), mv.iter().map(|x| x / nrm).collect(), nrm))
    };

    let (v0, mv0, _) = orthonormalize(random_vec(), &[], &[])
        .ok_or_else(|| Error::NumericalFailure("zero start vector".into()))?;
    basis.push(v0);
    m_basis.push(mv0);
    let mut prev: Option<(f64, f64)> = None;
    let mut extremes;
    loop {
        let j = basis.len() - 1;
        let w = h.apply_vec(&m_basis[j]);
        let a = dot(&w, &m_basis[j]);
        alpha.push(a);
        extremes = tridiagonal_extremes(&alpha, &beta);
        if !(extremes.0 > 0.0) {
            return Err(Error::HpdViolation { value: extremes.0 });
        }
        let stagnated = prev.is_some_and(|(lo, hi)| {
            (extremes.0 - lo).abs() <= opts.stagnation * extremes.0
                && (extremes.1 - hi).abs() <= opts.stagnation * extremes.1
        });
        prev = Some(extremes);
        if basis.len() >= max_iter || (stagnated && basis.len() >= 2) {
            break;
        }
        let mut r = w;
        axpy(-a, &basis[j], &mut r);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut r);
        }
        let scale = dot(&r, &m.spmv(&r)).max(0.0).sqrt();
        let next = orthonormalize(r, &basis, &m_basis);
        match next {
            Some((v, mv, b)) if b > 1e-10 * a.abs().max(scale) => {
                beta.push(b);
                basis.push(v);
                m_basis.push(mv);
            }
            _ => {
                // Invariant subspace: continue from a fresh direction.
                let fresh = orthonormalize(random_vec(), &basis, &m_basis);
                match fresh {
                    Some((v, mv, _)) => {
                        beta.push(0.0);
                        basis.push(v);
                        m_basis.push(mv);
                    }
                    None => break,
                }
            }
        }
    }
    Ok(KappaEstimate {
        lambda_min: extremes.0,
        lambda_max: extremes.1,
        iterations: alpha.len(),
    })
}

fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i + 1, i)] = beta[i];
            t[(i, i + 1)] = beta[i];
        }
    }
    let ev = t.symmetric_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `(1/kappa) / (1 + tau^2)`
pub fn theta_th(kappa: f64, tau: f64) -> f64 {
    (1.0 / kappa) / (1.0 + tau * tau)
}

/// `min_i 1 - (h_{i+1}/h_i)^2` over consecutive positive entries.
pub fn theta_exp(history: &[f64]) -> Option<f64> {
    history
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| 1.0 - (w[1] / w[0]).powi(2))
        .reduce(f64::min)
}

/// Minimum over random `y` in `range(P_D)` of
/// `<P_D A H y, y>_H^2 / (||P_D A H y||_H^2 ||y||_H^2)`. Sampling can only
/// overestimate the infimum.
pub fn theta_sampled(
    a: &dyn LinearOperator,
    h: &dyn LinearOperator,
    pair: &DeflationPair,
    n_samples: usize,
    seed: u64,
) -> f64 {
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..n_samples {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = pair.apply_pd(&y);
        let hy = h.apply_vec(&y);
        let yy = dot(&hy, &y);
        if yy <= 0.0 {
            continue;
        }
        let mut u = a.apply_vec(&hy);
        pair.apply_pd_in_place(&mut u);
        let hu = h.apply_vec(&u);
        let uu = dot(&hu, &u);
        let uy = dot(&hu, &y);
        let q = if uu > 0.0 { uy * uy / (uu * yy) } else { 0.0 };
        best = best.min(q);
    }
    best
}

/// `||a||_inf / (2 sqrt(nu c0))` for `a = eta pi (-y - 0.8, x)` on `[-1,1]^2`.
pub fn rho_bound_pde(nu: f64, c0: f64, eta: f64) -> Result<f64> {
    if !(nu > 0.0 && c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("nu = {nu} and c0 = {c0} must be positive")));
    }
    Ok(eta.abs() * std::f64::consts::PI * 4.24f64.sqrt() / (2.0 * (nu * c0).sqrt()))
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub lambda_min_hm: f64,
    pub lambda_max_hm: f64,
    pub kappa_hm: f64,
    pub tau: f64,
    pub theta_th: f64,
    pub theta_exp: Option<f64>,
    pub theta_sampled: Option<f64>,
    /// `theta_th <= theta_exp + 1e-12` (vacuous without a measured value).
    pub bound_satisfied: bool,
    /// Indices `i` with `(h_i/h_{i-1})^2 > 1 - theta_th + 1e-12`.
    pub step_violations: Vec<usize>,
}

/// Checks a completed run with `W = H` against the per-step bound
/// `(h_i/h_{i-1})^2 <= 1 - theta_th`.
pub fn verify_run(
    report: &SolveReport,
    kappa: &KappaEstimate,
    tau: f64,
    theta_sampled: Option<f64>,
) -> BoundReport {
    let th = theta_th(kappa.kappa(), tau);
    let texp = theta_exp(&report.residual_history);
    let step_violations = report
        .residual_history
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] > 0.0 && (w[1] / w[0]).powi(2) > 1.0 - th + BOUND_SLACK)
        .map(|(i, _)| i + 1)
        .collect();
    BoundReport {
        lambda_min_hm: kappa.lambda_min,
        lambda_max_hm: kappa.lambda_max,
        kappa_hm: kappa.kappa(),
        tau,
        theta_th: th,
        theta_exp: texp,
        theta_sampled,
        bound_satisfied: texp.map_or(true, |t| th <= t + BOUND_SLACK),
        step_violations,
    }
}
