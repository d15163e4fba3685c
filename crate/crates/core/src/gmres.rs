//! GMRES variants on the deflated system `P_D A x~ = P_D b`.
//!
//! * weighted right mode: Arnoldi in `<W., .>` on `v -> P_D A H v`,
//!   minimizing `||r_i||_W`;
//! * unweighted left mode: Euclidean Arnoldi on `v -> H P_D A v`,
//!   minimizing `||H r_i||`.

use std::time::Instant;

use crate::deflation::DeflationPair;
use crate::diagnostics::theta_exp;
use crate::error::{Error, Result};
use crate::linalg::vector::{all_finite, axpy, dot, norm2};
use crate::operators::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresMode {
    WeightedRight,
    UnweightedLeft,
}

/// Residual norm used by the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stopping {
    /// The minimized norm relative to the right-hand side: `||r||_W < tol ||b||_W`
    /// (right mode) or `||H r|| < tol ||H b||` (left mode).
    Natural,
    /// `||H r_i|| < tol ||H r_0||` in either mode.
    PreconditionedEuclidean,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
    pub mode: GmresMode,
    /// Relative threshold on the Arnoldi sub-diagonal for declaring breakdown.
    pub breakdown_eps: f64,
    pub stopping: Stopping,
    /// Also record `||H r_i||` in right mode.
    pub track_h_residual: bool,
    /// Always orthogonalize twice.
    pub full_reorthogonalization: bool,
    /// Record basis orthogonality and `||Y^T r_i||` at every step.
    pub audit: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1000,
            restart: None,
            mode: GmresMode::WeightedRight,
            breakdown_eps: 1e-14,
            stopping: Stopping::Natural,
            track_h_residual: false,
            full_reorthogonalization: false,
            audit: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.restart == Some(0) {
            return Err(Error::Config("restart must be at least 1".into()));
        }
        if !(self.breakdown_eps >= 0.0) {
            return Err(Error::Config("breakdown_eps must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Minimized residual norm per iteration, starting with `r_0`.
    pub residual_history: Vec<f64>,
    /// `||H r_i||` per iteration when tracked (always in left mode).
    pub h_residual_history: Vec<f64>,
    pub breakdown: bool,
    /// `min_i 1 - (h_{i+1}/h_i)^2`; `None` for fewer than two entries.
    pub theta_exp: Option<f64>,
    pub wallclock: f64,
    /// Norm of the stopping reference (`||b||_W`, `||H b||` or `||H r_0||`).
    pub reference_norm: f64,
    /// Explicitly recomputed final residual in the minimized norm.
    pub true_residual: f64,
    pub drift_warning: bool,
    /// Largest deviation of the last Arnoldi basis from orthonormality (audit).
    pub orthogonality_error: Option<f64>,
    /// Largest `||Y^T v|| / (||Y||_F ||v||)` over the initial residual and
    /// the Arnoldi directions, which span every residual (audit, right mode).
    pub membership_error: Option<f64>,
    /// `||b - A x||_W / ||b||_W` of the recombined solution ([`solve_full`]).
    pub full_relative_residual: Option<f64>,
}

struct Problem<'a> {
    a: &'a dyn LinearOperator,
    h: &'a dyn LinearOperator,
    /// `None` means Euclidean.
    w: Option<&'a dyn LinearOperator>,
    pair: &'a DeflationPair,
    mode: GmresMode,
    b: &'a [f64],
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.b.len()
    }

    /// Krylov operator applied to `v`; right mode also returns `H v`.
    fn op(&self, v: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
        match self.mode {
            GmresMode::WeightedRight => {
                let hv = self.h.apply_vec(v);
                let mut out = self.a.apply_vec(&hv);
                self.pair.apply_pd_in_place(&mut out);
                (out, Some(hv))
            }
            GmresMode::UnweightedLeft => {
                let mut av = self.a.apply_vec(v);
                self.pair.apply_pd_in_place(&mut av);
                (self.h.apply_vec(&av), None)
            }
        }
    }

    /// `P_D (b - A x)`
    fn projected_residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.apply_vec(x);
        let mut r: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        self.pair.apply_pd_in_place(&mut r);
        r
    }

    /// Residual of the Krylov system: `r` (right) or `H r` (left).
    fn krylov_residual(&self, x: &[f64]) -> Vec<f64> {
        let r = self.projected_residual(x);
        match self.mode {
            GmresMode::WeightedRight => r,
            GmresMode::UnweightedLeft => self.h.apply_vec(&r),
        }
    }

    fn weight(&self, v: &[f64]) -> Vec<f64> {
        match self.w {
            Some(w) => w.apply_vec(v),
            None => v.to_vec(),
        }
    }

    fn checked_norm(&self, v: &[f64], wv: &[f64]) -> Result<f64> {
        let q = dot(v, wv);
        if q < -1e-12 * dot(v, v) {
            return Err(Error::HpdViolation { value: q });
        }
        Ok(q.max(0.0).sqrt())
    }

    /// `||H r||` for a Krylov residual vector.
    fn h_norm(&self, krylov_r: &[f64]) -> f64 {
        match self.mode {
            GmresMode::WeightedRight => norm2(&self.h.apply_vec(krylov_r)),
            GmresMode::UnweightedLeft => norm2(krylov_r),
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Back substitution on the leading `k x k` upper triangle.
fn solve_upper(r: &[Vec<f64>], g: &[f64], k: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= r[j][i] * y[j];
        }
        y[i] = s / r[i][i];
    }
    y
}

/// `V (Omega^T (0, .., 0, g_k))`: the residual vector after `k` steps.
fn residual_vector(basis: &[Vec<f64>], rot: &[(f64, f64)], g_last: f64, k: usize) -> Vec<f64> {
    let mut q = vec![0.0; k + 1];
    q[k] = g_last;
    for i in (0..k).rev() {
        let (c, s) = rot[i];
        let (a, b) = (q[i], q[i + 1]);
        q[i] = c * a - s * b;
        q[i + 1] = s * a + c * b;
    }
    let mut r = vec![0.0; basis[0].len()];
    for (v, &qi) in basis.iter().zip(&q) {
        axpy(qi, v, &mut r);
    }
    r
}

fn run(p: &Problem, cfg: &SolverConfig, x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = p.n();
    for (ctx, d) in [("A", p.a.dim()), ("H", p.h.dim()), ("deflation", p.pair.n())] {
        if d != n {
            return Err(Error::DimensionMismatch { context: ctx, expected: n, found: d });
        }
    }
    if let Some(w) = p.w {
        if !w.claims_hpd() {
            return Err(Error::InvalidArgument(format!("weight '{}' is not declared hpd", w.label())));
        }
        if w.dim() != n {
            return Err(Error::DimensionMismatch { context: "W", expected: n, found: w.dim() });
        }
    }
    if !all_finite(p.b) {
        return Err(Error::InvalidArgument("right-hand side has non-finite entries".into()));
    }
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(Error::DimensionMismatch { context: "x0", expected: n, found: x0.len() })
        }
        None => vec![0.0; n],
    };

    let track_h = p.mode == GmresMode::UnweightedLeft
        || cfg.track_h_residual
        || cfg.stopping == Stopping::PreconditionedEuclidean;

    let mut report = SolveReport::default();
    let r0 = p.krylov_residual(&x);
    let wr0 = p.weight(&r0);
    let beta0 = p.checked_norm(&r0, &wr0)?;
    let h0 = if track_h { p.h_norm(&r0) } else { f64::NAN };
    let reference = match (cfg.stopping, p.mode) {
        (Stopping::PreconditionedEuclidean, _) => h0,
        (Stopping::Natural, GmresMode::WeightedRight) => {
            let wb = p.weight(p.b);
            p.checked_norm(p.b, &wb)?
        }
        (Stopping::Natural, GmresMode::UnweightedLeft) => norm2(&p.h.apply_vec(p.b)),
    };
    report.reference_norm = reference;
    let threshold = cfg.tol * reference;
    let stop_value = |natural: f64, h: f64| match cfg.stopping {
        Stopping::Natural => natural,
        Stopping::PreconditionedEuclidean => h,
    };

    report.residual_history.push(beta0);
    if track_h {
        report.h_residual_history.push(h0);
    }
    let mut membership = 0.0f64;
    if cfg.audit && p.mode == GmresMode::WeightedRight {
        membership = rel_membership(p.pair, &r0);
    }

    let mut current = beta0;
    let mut current_h = h0;
    let mut iterations = 0;
    let mut restart_r = r0;
    let mut restart_wr = wr0;
    let cycle_len = cfg.restart.unwrap_or(usize::MAX);
    let mut orth_err = None;

    'outer: while !(stop_value(current, current_h) < threshold) && iterations < cfg.max_iter {
        if current == 0.0 {
            break;
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut w_basis: Vec<Vec<f64>> = Vec::new();
        let mut h_basis: Vec<Vec<f64>> = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut rot: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![current];
        basis.push(restart_r.iter().map(|v| v / current).collect());
        w_basis.push(restart_wr.iter().map(|v| v / current).collect());

        let mut k = 0;
        let mut finished = false;
        while k < cycle_len && iterations < cfg.max_iter {
            let (mut w, hv) = p.op(&basis[k]);
            if let Some(hv) = hv {
                h_basis.push(hv);
            }
            let ww0 = p.weight(&w);
            let norm_before = p.checked_norm(&w, &ww0)?;
            let mut col = vec![0.0; k + 2];
            let mut passes = if cfg.full_reorthogonalization { 2 } else { 1 };
            let mut pass = 0;
            let mut ww;
            let mut norm_after;
            loop {
                for j in 0..=k {
                    let hij = dot(&w, &w_basis[j]);
                    col[j] += hij;
                    axpy(-hij, &basis[j], &mut w);
                }
                ww = p.weight(&w);
                norm_after = p.checked_norm(&w, &ww)?;
                pass += 1;
                if pass == 1 && p.mode == GmresMode::WeightedRight && p.pair.dim() > 0 {
                    // Remove the drift out of range(P_D) left by cancellation.
                    p.pair.apply_pd_in_place(&mut w);
                    passes = 2;
                    continue;
                }
                if pass == 1 && passes == 1 && norm_after < norm_before / std::f64::consts::SQRT_2 {
                    passes = 2;
                }
                if pass >= passes {
                    break;
                }
            }
            col[k + 1] = norm_after;
            if !col.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericalFailure(format!(
                    "non-finite Hessenberg entry at iteration {}",
                    iterations + 1
                )));
            }
            let lucky = norm_after <= cfg.breakdown_eps * norm_before || norm_after == 0.0;

            for (i, &(c, s)) in rot.iter().enumerate() {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = c * a + s * b;
                col[i + 1] = -s * a + c * b;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = 0.0;
            rot.push((c, s));
            let gk = g[k];
            g[k] = c * gk;
            g.push(-s * gk);
            cols.push(col);
            iterations += 1;
            k += 1;

            let diag_scale = cols.iter().map(|c| c[c.len() - 2].abs()).fold(0.0, f64::max);
            let singular_r = cols[k - 1][k - 1].abs() <= cfg.breakdown_eps * diag_scale.max(f64::MIN_POSITIVE);
            current = g[k].abs();
            if !lucky {
                if cfg.audit && p.mode == GmresMode::WeightedRight {
                    membership = membership.max(rel_membership(p.pair, &w));
                }
                basis.push(w.iter().map(|v| v / norm_after).collect());
                w_basis.push(ww.iter().map(|v| v / norm_after).collect());
            }
            if track_h {
                let basis_k: Vec<Vec<f64>> = if lucky {
                    let mut b = basis.clone();
                    b.push(vec![0.0; n]);
                    b
                } else {
                    Vec::new()
                };
                let used = if lucky { &basis_k } else { &basis };
                let rk = residual_vector(used, &rot, g[k], k);
                current_h = p.h_norm(&rk);
            }
            if singular_r {
                // Degenerate Krylov space: keep the minimizer of the previous step.
                report.breakdown = true;
                iterations -= 1;
                update_x(p, &mut x, &cols, &g, &basis, &h_basis, k - 1);
                finished = true;
                break;
            }
            report.residual_history.push(current);
            if track_h {
                report.h_residual_history.push(current_h);
            }
            if stop_value(current, current_h) < threshold {
                update_x(p, &mut x, &cols, &g, &basis, &h_basis, k);
                finished = true;
                break;
            }
            if lucky {
                report.breakdown = true;
                update_x(p, &mut x, &cols, &g, &basis, &h_basis, k);
                finished = true;
                break;
            }
        }
        if cfg.audit {
            orth_err = Some(orthogonality_error(&basis, &w_basis));
        }
        if !finished {
            update_x(p, &mut x, &cols, &g, &basis, &h_basis, k);
        }
        // Restart (or final) residual recomputed explicitly.
        restart_r = p.krylov_residual(&x);
        restart_wr = p.weight(&restart_r);
        let explicit = p.checked_norm(&restart_r, &restart_wr)?;
        if finished || iterations >= cfg.max_iter {
            report.true_residual = explicit;
            break 'outer;
        }
        current = explicit;
        if track_h {
            current_h = p.h_norm(&restart_r);
        }
    }
    if report.residual_history.len() == 1 {
        report.true_residual = beta0;
    }
    let last = *report.residual_history.last().expect("history");
    let last_stop = match cfg.stopping {
        Stopping::Natural => last,
        Stopping::PreconditionedEuclidean => *report.h_residual_history.last().unwrap_or(&last),
    };
    report.converged = last_stop < threshold || (report.breakdown && report.true_residual < 10.0 * cfg.tol * reference.max(beta0));
    if (report.true_residual - last).abs() > 10.0 * cfg.tol * reference.max(f64::MIN_POSITIVE) {
        report.drift_warning = true;
        log::warn!(
            "residual recurrence drift: recurrence {:.3e}, explicit {:.3e}",
            last,
            report.true_residual
        );
    }
    report.iterations = iterations;
    report.theta_exp = theta_exp(&report.residual_history);
    report.orthogonality_error = orth_err;
    report.membership_error = cfg.audit.then_some(membership);
    report.wallclock = start.elapsed().as_secs_f64();
    if !all_finite(&x) {
        return Err(Error::NumericalFailure("non-finite iterate".into()));
    }
    Ok((x, report))
}

fn rel_membership(pair: &DeflationPair, r: &[f64]) -> f64 {
    if pair.dim() == 0 {
        return 0.0;
    }
    let nr = norm2(r);
    if nr == 0.0 {
        return 0.0;
    }
    norm2(&pair.y_transpose_apply(r)) / (nr * pair.y().frobenius_norm())
}

fn orthogonality_error(basis: &[Vec<f64>], w_basis: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&basis[i], &w_basis[j]) - target).abs());
        }
    }
    worst
}

/// `x += H V y` (right) or `x += V y` (left) with `y` the least-squares
/// solution on the first `k` columns.
fn update_x(
    p: &Problem,
    x: &mut [f64],
    cols: &[Vec<f64>],
    g: &[f64],
    basis: &[Vec<f64>],
    h_basis: &[Vec<f64>],
    k: usize,
) {
    if k == 0 {
        return;
    }
    let y = solve_upper(cols, g, k);
    let dirs = match p.mode {
        GmresMode::WeightedRight => h_basis,
        GmresMode::UnweightedLeft => basis,
    };
    for (d, &yi) in dirs.iter().zip(&y) {
        axpy(yi, d, x);
    }
}

/// Weighted, right-preconditioned, deflated GMRES for
/// `P_D A H u = P_D b`, returning `x~ = H u`. Use
/// [`DeflationPair::recombine`] (or [`solve_full`]) to obtain `x`.
pub fn wpd_gmres(
    a: &dyn LinearOperator,
    b: &[f64],
    h: &dyn LinearOperator,
    w: &dyn LinearOperator,
    pair: &DeflationPair,
    cfg: &SolverConfig,
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport)> {
    let p = Problem {
        a,
        h,
        w: Some(w),
        pair,
        mode: GmresMode::WeightedRight,
        b,
    };
    run(&p, cfg, x0)
}

/// Euclidean GMRES on `H P_D A x~ = H P_D b`.
pub fn gmres_unweighted_left(
    a: &dyn LinearOperator,
    b: &[f64],
    h: &dyn LinearOperator,
    pair: &DeflationPair,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let p = Problem {
        a,
        h,
        w: None,
        pair,
        mode: GmresMode::UnweightedLeft,
        b,
    };
    run(&p, cfg, None)
}

/// Direct part, projected iterative part, and recombination. The solver mode
/// is taken from `cfg`; `w` is ignored in left mode.
pub fn solve_full(
    a: &dyn LinearOperator,
    b: &[f64],
    h: &dyn LinearOperator,
    w: &dyn LinearOperator,
    pair: &DeflationPair,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let (xt, mut report) = match cfg.mode {
        GmresMode::WeightedRight => wpd_gmres(a, b, h, w, pair, cfg, None)?,
        GmresMode::UnweightedLeft => gmres_unweighted_left(a, b, h, pair, cfg)?,
    };
    let x = pair.recombine(&xt, b);
    let ax = a.apply_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nr = dot(&w.apply_vec(&r), &r).max(0.0).sqrt();
    let nb = dot(&w.apply_vec(b), b).max(0.0).sqrt();
    report.full_relative_residual = Some(if nb > 0.0 { nr / nb } else { nr });
    Ok((x, report))
}

/// `1 - <u, r>_W^2 / (||u||_W^2 ||r||_W^2)` with `u = P_D A H r` after
/// projecting `r` into `range(P_D)`: the squared residual ratio achieved by
/// the best one-dimensional correction from `r`.
pub fn one_step_bound_probe(
    a: &dyn LinearOperator,
    h: &dyn LinearOperator,
    w: &dyn LinearOperator,
    pair: &DeflationPair,
    r: &[f64],
) -> Result<f64> {
    let r = pair.apply_pd(r);
    let wr = w.apply_vec(&r);
    let rr = dot(&r, &wr);
    if rr <= 0.0 {
        return Ok(0.0);
    }
    let mut u = a.apply_vec(&h.apply_vec(&r));
    pair.apply_pd_in_place(&mut u);
    let uu = dot(&w.apply_vec(&u), &u);
    if uu <= 0.0 {
        return Ok(1.0);
    }
    let ur = dot(&u, &wr);
    Ok(1.0 - ur * ur / (uu * rr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CsrMatrix, DenseMatrix};
    use crate::operators::{identity_op, inverse_hermitian_op};

    fn tri(n: usize, skew: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0 + skew));
                t.push((i + 1, i, -1.0 - skew));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_system_one_iteration() {
        let a = CsrMatrix::identity(4);
        let b = [1.0, 2.0, 3.0, 4.0];
        let id = identity_op(4);
        let (x, rep) = wpd_gmres(&a, &b, &id, &id, &DeflationPair::null(4), &SolverConfig::default(), None).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_start_needs_no_iteration() {
        let a = tri(5, 0.3);
        let x0 = [1.0, -1.0, 2.0, 0.5, 0.0];
        let b = a.spmv(&x0);
        let id = identity_op(5);
        let (x, rep) =
            wpd_gmres(&a, &b, &id, &id, &DeflationPair::null(5), &SolverConfig::default(), Some(&x0)).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
        assert_eq!(x, x0.to_vec());
    }

    #[test]
    fn inverse_preconditioner_one_iteration() {
        let a = tri(20, 0.0);
        let h = inverse_hermitian_op(&a).unwrap();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let (_, rep) = wpd_gmres(&a, &b, &h, &h, &DeflationPair::null(20), &SolverConfig::default(), None).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!((rep.theta_exp.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_history_and_orthogonality() {
        let a = tri(40, 0.8);
        let b: Vec<f64> = (0..40).map(|i| 1.0 + (i % 3) as f64).collect();
        let w = crate::operators::MatrixOp::new(tri(40, 0.0)).declare_hpd();
        let cfg = SolverConfig { audit: true, ..Default::default() };
        let (_, rep) = wpd_gmres(&a, &b, &identity_op(40), &w, &DeflationPair::null(40), &cfg, None).unwrap();
        assert!(rep.converged);
        for pair in rep.residual_history.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
        assert!(rep.orthogonality_error.unwrap() < 1e-10);
        assert!(!rep.drift_warning);
    }

    #[test]
    fn deflated_solve_recombines() {
        let a = tri(30, 0.5);
        let b: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let z = DenseMatrix::from_columns(30, &[(0..30).map(|i| i as f64).collect(), vec![1.0; 30]]);
        let id = identity_op(30);
        let pair = DeflationPair::build_h_orthogonal(&a, &id, z).unwrap();
        let cfg = SolverConfig { audit: true, ..Default::default() };
        let (x, rep) = solve_full(&a, &b, &id, &id, &pair, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.full_relative_residual.unwrap() < 1e-9);
        assert!(rep.membership_error.unwrap() < 1e-10, "{:?}", rep.membership_error);
        let r: Vec<f64> = b.iter().zip(a.spmv(&x)).map(|(b, ax)| b - ax).collect();
        assert!(norm2(&r) < 1e-9 * norm2(&b));
    }

    #[test]
    fn left_mode_minimizes_h_residual() {
        let a = tri(30, 1.5);
        let m = tri(30, 0.0);
        let h = inverse_hermitian_op(&m).unwrap();
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let pair = DeflationPair::null(30);
        let cfg = SolverConfig {
            stopping: Stopping::PreconditionedEuclidean,
            track_h_residual: true,
            ..Default::default()
        };
        let (_, wr) = wpd_gmres(&a, &b, &h, &h, &pair, &cfg, None).unwrap();
        let (_, ur) = gmres_unweighted_left(&a, &b, &h, &pair, &cfg).unwrap();
        let n = wr.h_residual_history.len().min(ur.h_residual_history.len());
        for i in 0..n {
            assert!(ur.h_residual_history[i] <= wr.h_residual_history[i] * (1.0 + 1e-10) + 1e-300);
        }
    }

    #[test]
    fn restarted_converges() {
        let a = tri(50, 0.4);
        let b = vec![1.0; 50];
        let id = identity_op(50);
        let cfg = SolverConfig { restart: Some(5), max_iter: 500, ..Default::default() };
        let (_, rep) = wpd_gmres(&a, &b, &id, &id, &DeflationPair::null(50), &cfg, None).unwrap();
        assert!(rep.converged);
        assert!(rep.true_residual < 1e-9 * norm2(&b));
    }

    #[test]
    fn probe_is_zero_for_identity() {
        let id = identity_op(3);
        let a = CsrMatrix::identity(3);
        let v = one_step_bound_probe(&a, &id, &id, &DeflationPair::null(3), &[1.0, 2.0, 3.0]).unwrap();
        assert!(v.abs() < 1e-15);
        assert_eq!(one_step_bound_probe(&a, &id, &id, &DeflationPair::null(3), &[0.0; 3]).unwrap(), 0.0);
    }
}
