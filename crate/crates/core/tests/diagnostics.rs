mod common;

use proptest::prelude::*;

use common::{csr_to_na, na_to_csr, random_spd, rng};
use wpdgmres::deflation::DeflationPair;
use wpdgmres::diagnostics::{
    estimate_kappa_hm, rho_bound_pde, theta_exp, theta_sampled, theta_th, verify_run,
    KappaEstimate, KappaOptions,
};
use wpdgmres::eigenpencil::{pencil_dense, real_deflation_basis, tau_of};
use wpdgmres::gmres::{wpd_gmres, SolveReport, SolverConfig};
use wpdgmres::linalg::CsrMatrix;
use wpdgmres::operators::{
    additive_schwarz_op, identity_op, inverse_hermitian_op, partition_structured, CoarseSpace,
    LinearOperator, MatrixOp,
};
use wpdgmres::problems::model_problem;

/// Extreme eigenvalues of `H M` from the symmetric matrix `L^T H L`, `M = L L^T`.
fn oracle_extremes(h: &CsrMatrix, m: &CsrMatrix) -> (f64, f64) {
    let l = csr_to_na(m).cholesky().unwrap().l();
    let s = l.transpose() * csr_to_na(h) * &l;
    let s = (&s + s.transpose()) * 0.5;
    let ev = s.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

proptest! {
    #[test]
    fn theta_th_is_strictly_decreasing(kappa in 1.0f64..1e4, tau in 0.0f64..100.0, dk in 1e-3f64..10.0, dt in 1e-3f64..10.0) {
        prop_assert!(theta_th(kappa + dk, tau) < theta_th(kappa, tau));
        prop_assert!(theta_th(kappa, tau + dt) < theta_th(kappa, tau));
        let t = theta_th(kappa, tau);
        prop_assert!(t > 0.0 && t <= 1.0);
    }

    #[test]
    fn kappa_ritz_values_lie_inside_the_spectrum(n in 2usize..120, seed in 0u64..10_000) {
        let mut r = rng(seed);
        let m = na_to_csr(&random_spd(n, &mut r));
        let hm = na_to_csr(&random_spd(n, &mut r));
        let h = MatrixOp::new(hm.clone()).declare_hpd();
        let est = estimate_kappa_hm(&h, &m, &KappaOptions::default()).unwrap();
        let (lo, hi) = oracle_extremes(&hm, &m);
        prop_assert!(est.lambda_min >= lo * (1.0 - 1e-10));
        prop_assert!(est.lambda_max <= hi * (1.0 + 1e-10));
        // at this size the Krylov space is exhausted: estimates are sharp
        prop_assert!((est.lambda_min - lo).abs() <= 1e-8 * hi);
        prop_assert!((est.lambda_max - hi).abs() <= 1e-8 * hi);
    }
}

#[test]
fn kappa_on_a_larger_sparse_problem_is_bracketed() {
    let p = model_problem(20, 1.0, 1.0, 1.0).unwrap();
    let id = identity_op(p.n());
    let est = estimate_kappa_hm(&id, &p.m, &KappaOptions::default()).unwrap();
    let (lo, hi) = oracle_extremes(&CsrMatrix::identity(p.n()), &p.m);
    assert!(est.lambda_min >= lo * (1.0 - 1e-10) && est.lambda_max <= hi * (1.0 + 1e-10));
    assert!(est.kappa() <= hi / lo * (1.0 + 1e-10));
    assert!(est.kappa() >= 0.99 * hi / lo);
}

#[test]
fn ordering_chain_on_model_problem_runs() {
    let p = model_problem(12, 1.0, 1.0, 10.0).unwrap();
    let a = p.a();
    let set = pencil_dense(&p.skew_part(), &p.m, 8).unwrap();
    let sets = partition_structured(p.grid(), 4, 1, &p.m).unwrap();
    let pres: Vec<Box<dyn LinearOperator>> = vec![
        Box::new(identity_op(p.n())),
        Box::new(inverse_hermitian_op(&p.m).unwrap()),
        Box::new(additive_schwarz_op(&p.m, sets, CoarseSpace::PartitionOfUnity).unwrap()),
    ];
    for h in &pres {
        let kappa = estimate_kappa_hm(h.as_ref(), &p.m, &KappaOptions::default()).unwrap();
        for m in [0usize, 4] {
            let pair = if m == 0 {
                DeflationPair::null(p.n())
            } else {
                DeflationPair::build_h_orthogonal(&a, h.as_ref(), real_deflation_basis(&set, m).unwrap()).unwrap()
            };
            let (_, rep) = wpd_gmres(&a, &p.b, h.as_ref(), h.as_ref(), &pair, &SolverConfig::default(), None).unwrap();
            let sampled = theta_sampled(&a, h.as_ref(), &pair, 300, 9);
            let bound = verify_run(&rep, &kappa, tau_of(&set, m).value, Some(sampled));
            assert!(bound.theta_th <= sampled + 1e-12, "{} {m}: {bound:?}", h.label());
            assert!(bound.theta_th <= bound.theta_exp.unwrap() + 1e-12, "{} {m}: {bound:?}", h.label());
            assert!(bound.step_violations.is_empty());
        }
    }
}

#[test]
fn theta_exp_examples() {
    assert_eq!(theta_exp(&[1.0]), None);
    assert_eq!(theta_exp(&[]), None);
    assert_eq!(theta_exp(&[1.0, 0.5]), Some(0.75));
    assert_eq!(theta_exp(&[2.0, 1.0, 0.9]), Some(1.0 - 0.81));
    // a zero residual ends the sequence without dividing by zero
    assert_eq!(theta_exp(&[1.0, 0.0, 0.0]), Some(1.0));
}

#[test]
fn rho_bound_values() {
    let c = rho_bound_pde(1.0, 1.0, 1.0).unwrap();
    assert!((c - std::f64::consts::PI * 4.24f64.sqrt() / 2.0).abs() <= 1e-15);
    assert!((3.23..3.24).contains(&c));
    assert!((rho_bound_pde(1.0, 1.0, 100.0).unwrap() - 100.0 * c).abs() <= 1e-12);
    assert!((rho_bound_pde(4.0, 1.0, 1.0).unwrap() - c / 2.0).abs() <= 1e-15);
    assert!(rho_bound_pde(0.0, 1.0, 1.0).is_err());
    assert!(rho_bound_pde(1.0, -1.0, 1.0).is_err());
}

#[test]
fn verify_run_flags_violating_steps() {
    let report = SolveReport {
        residual_history: vec![1.0, 0.5, 0.49, 0.1],
        ..SolveReport::default()
    };
    let kappa = KappaEstimate { lambda_min: 1.0, lambda_max: 2.0, iterations: 1 };
    // theta_th = 0.5: steps with squared ratio above 0.5 violate
    let bound = verify_run(&report, &kappa, 0.0, None);
    assert_eq!(bound.theta_th, 0.5);
    assert_eq!(bound.step_violations, vec![2]);
    assert!(!bound.bound_satisfied);
    let ok = SolveReport { residual_history: vec![1.0, 0.5], ..SolveReport::default() };
    assert!(verify_run(&ok, &kappa, 0.0, None).bound_satisfied);
}
