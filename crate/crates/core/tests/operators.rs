mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use common::{csr_to_na, random_vec, rng};
use wpdgmres::diagnostics::{estimate_kappa_hm, KappaOptions};
use wpdgmres::linalg::{CsrMatrix, DenseMatrix};
use wpdgmres::operators::{
    additive_schwarz_op, identity_op, inverse_hermitian_op, linearity_defect, partition_structured,
    verify_hpd, CoarseSpace, LinearOperator,
};
use wpdgmres::problems::model_problem;
use wpdgmres::Error;

fn grid_laplacian(nx: usize, ny: usize) -> CsrMatrix {
    let idx = |i: usize, j: usize| j * nx + i;
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            t.push((idx(i, j), idx(i, j), 4.0));
            if i + 1 < nx {
                t.push((idx(i, j), idx(i + 1, j), -1.0));
                t.push((idx(i + 1, j), idx(i, j), -1.0));
            }
            if j + 1 < ny {
                t.push((idx(i, j), idx(i, j + 1), -1.0));
                t.push((idx(i, j + 1), idx(i, j), -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(nx * ny, nx * ny, &t).unwrap()
}

proptest! {
    #[test]
    fn partition_covers_every_unknown(nx in 2usize..14, ny in 2usize..14, parts in 1usize..9, overlap in 0usize..3) {
        let adj = grid_laplacian(nx, ny);
        let parts = parts.min(nx * ny);
        let sets = match partition_structured((nx, ny), parts, overlap, &adj) {
            Ok(s) => s,
            // the block split does not fit this grid
            Err(Error::Config(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(sets.len(), parts);
        let mut seen = vec![0usize; nx * ny];
        for s in &sets {
            prop_assert!(!s.is_empty());
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            for &i in s {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c >= 1));
        if overlap == 0 {
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
        // more overlap only grows the sets
        let wider = partition_structured((nx, ny), parts, overlap + 1, &adj).unwrap();
        for (a, b) in sets.iter().zip(&wider) {
            prop_assert!(a.iter().all(|i| b.binary_search(i).is_ok()));
        }
    }

    #[test]
    fn schwarz_is_hpd_and_linear(nx in 3usize..10, ny in 3usize..10, parts in 1usize..6, seed in 0u64..100) {
        let m = grid_laplacian(nx, ny);
        let Ok(sets) = partition_structured((nx, ny), parts, 1, &m) else { return Ok(()) };
        for coarse in [CoarseSpace::None, CoarseSpace::PartitionOfUnity] {
            let h = additive_schwarz_op(&m, sets.clone(), coarse).unwrap();
            let rep = verify_hpd(&h, 20, seed);
            prop_assert!(rep.passed(), "{:?}", rep);
            prop_assert!(linearity_defect(&h, seed) <= 1e-12);
        }
    }
}

#[test]
fn single_subdomain_is_the_exact_inverse() {
    let m = grid_laplacian(6, 5);
    let h = additive_schwarz_op(&m, vec![(0..30).collect()], CoarseSpace::None).unwrap();
    let mut r = rng(1);
    let v = random_vec(30, &mut r);
    let oracle = csr_to_na(&m).lu().solve(&DVector::from_column_slice(&v)).unwrap();
    let x = h.apply_vec(&v);
    for i in 0..30 {
        assert!((x[i] - oracle[i]).abs() <= 1e-12 * oracle.amax());
    }
}

#[test]
fn full_coarse_space_gives_the_exact_inverse() {
    let m = grid_laplacian(4, 4);
    let sets = partition_structured((4, 4), 4, 0, &m).unwrap();
    let h = additive_schwarz_op(&m, sets, CoarseSpace::Vectors(DenseMatrix::identity(16))).unwrap();
    assert_eq!(h.coarse_dim(), 16);
    let mut r = rng(2);
    let v = random_vec(16, &mut r);
    let inv = csr_to_na(&m).lu().solve(&DVector::from_column_slice(&v)).unwrap();
    let hv = h.apply_vec(&v);
    for i in 0..16 {
        assert!((hv[i] - inv[i]).abs() <= 1e-12 * inv.amax());
    }
}

#[test]
fn coarse_equations_are_solved_exactly() {
    // Phi^T (r - M H r) = 0 for every r
    let m = grid_laplacian(9, 7);
    let sets = partition_structured((9, 7), 6, 1, &m).unwrap();
    let h = additive_schwarz_op(&m, sets, CoarseSpace::PartitionOfUnity).unwrap();
    let phi = h.coarse_basis().unwrap().clone();
    let mut r = rng(12);
    for _ in 0..10 {
        let v = random_vec(63, &mut r);
        let res = common::sub(&v, &m.spmv(&h.apply_vec(&v)));
        let proj = phi.tr_mul_vec(&res);
        let scale = phi.frobenius_norm() * wpdgmres::linalg::vector::norm2(&v);
        assert!(wpdgmres::linalg::vector::norm2(&proj) <= 1e-10 * scale);
    }
}

#[test]
fn rank_deficient_coarse_basis_is_rejected() {
    let m = grid_laplacian(3, 3);
    let sets = partition_structured((3, 3), 2, 0, &m).unwrap();
    let col = vec![1.0; 9];
    let phi = DenseMatrix::from_columns(9, &[col.clone(), col]);
    assert!(additive_schwarz_op(&m, sets, CoarseSpace::Vectors(phi)).is_err());
}

#[test]
fn local_failure_names_the_subdomain() {
    let mut m = grid_laplacian(4, 4).to_dense();
    m.set(15, 15, -4.0);
    let m = CsrMatrix::from_dense(&m);
    let sets = partition_structured((4, 4), 4, 0, &m).unwrap();
    let owner = sets.iter().position(|s| s.contains(&15)).unwrap();
    match additive_schwarz_op(&m, sets, CoarseSpace::None) {
        Err(Error::NotPositiveDefinite { subdomain, .. }) => assert_eq!(subdomain, Some(owner)),
        other => panic!("expected a local pivot failure, got {other:?}"),
    }
}

#[test]
fn condition_ordering_on_the_model_problem() {
    let p = model_problem(16, 1.0, 1.0, 1.0).unwrap();
    let opts = KappaOptions::default();
    let exact = estimate_kappa_hm(&inverse_hermitian_op(&p.m).unwrap(), &p.m, &opts).unwrap().kappa();
    let none = estimate_kappa_hm(&identity_op(p.n()), &p.m, &opts).unwrap().kappa();
    let sets = partition_structured(p.grid(), 16, 1, &p.m).unwrap();
    for coarse in [CoarseSpace::None, CoarseSpace::PartitionOfUnity] {
        let h = additive_schwarz_op(&p.m, sets.clone(), coarse).unwrap();
        let k = estimate_kappa_hm(&h, &p.m, &opts).unwrap().kappa();
        assert!((exact - 1.0).abs() <= 1e-10, "kappa(M^-1 M) = {exact}");
        assert!(exact <= k && k <= none, "{exact} <= {k} <= {none}");
    }
}

#[test]
fn inverse_hermitian_passes_hpd_check() {
    let p = model_problem(8, 1.0, 1.0, 1.0).unwrap();
    let h = inverse_hermitian_op(&p.m).unwrap();
    assert!(verify_hpd(&h, 30, 4).passed());
    assert!(linearity_defect(&h, 4) <= 1e-12);
    assert_eq!(h.label(), "inv_hermitian");
}
