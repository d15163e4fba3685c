//! Apply-only linear operators and the preconditioners used with the solver:
//! identity, inverse of the Hermitian part, and one-level Additive Schwarz.

mod schwarz;

pub use schwarz::{
    additive_schwarz_op, partition_structured, CoarseSpace, SchwarzPreconditioner,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::vector::{dot, norm2};
use crate::linalg::{sparse_cholesky, CholeskyFactor, CsrMatrix};

/// A square linear map known only through its action.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = Op x`; `x` and `y` have length [`LinearOperator::dim`].
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Whether the operator is declared Hermitian positive definite.
    fn claims_hpd(&self) -> bool;

    fn label(&self) -> &str;

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

#[derive(Debug, Clone)]
pub struct IdentityOp {
    n: usize,
}

pub fn identity_op(n: usize) -> IdentityOp {
    IdentityOp { n }
}

impl LinearOperator for IdentityOp {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }

    fn claims_hpd(&self) -> bool {
        true
    }

    fn label(&self) -> &str {
        "identity"
    }
}

/// A sparse matrix viewed as an operator.
#[derive(Debug, Clone)]
pub struct MatrixOp {
    matrix: CsrMatrix,
    hpd: bool,
    label: String,
}

impl MatrixOp {
    pub fn new(matrix: CsrMatrix) -> Self {
        assert!(matrix.is_square(), "MatrixOp needs a square matrix");
        Self {
            matrix,
            hpd: false,
            label: "matrix".to_string(),
        }
    }

    /// Declares the matrix hpd. Nothing is checked; see [`verify_hpd`].
    pub fn declare_hpd(mut self) -> Self {
        self.hpd = true;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
}

impl LinearOperator for MatrixOp {
    fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.spmv_into(x, y);
    }

    fn claims_hpd(&self) -> bool {
        self.hpd
    }

    fn label(&self) -> &str {
        &self.label
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }

    fn claims_hpd(&self) -> bool {
        false
    }

    fn label(&self) -> &str {
        "matrix"
    }
}

/// `v -> M^{-1} v` through a stored Cholesky factor.
#[derive(Debug, Clone)]
pub struct InverseHermitianOp {
    factor: CholeskyFactor,
}

impl InverseHermitianOp {
    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }
}

/// Preconditioner `H = M^{-1}` for an spd `M`.
pub fn inverse_hermitian_op(m: &CsrMatrix) -> Result<InverseHermitianOp> {
    Ok(InverseHermitianOp {
        factor: sparse_cholesky(m)?,
    })
}

impl LinearOperator for InverseHermitianOp {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.factor.apply_inverse(x));
    }

    fn claims_hpd(&self) -> bool {
        true
    }

    fn label(&self) -> &str {
        "inv_hermitian"
    }
}

/// Outcome of the probabilistic hpd test.
#[derive(Debug, Clone, PartialEq)]
pub struct HpdReport {
    pub samples: usize,
    /// Largest `|<Hv,w> - <v,Hw>| / (||Hv|| ||w|| + ||v|| ||Hw||)`.
    pub max_symmetry_error: f64,
    /// Smallest `<Hv,v> / (||v|| ||Hv||)`.
    pub min_rayleigh: f64,
    pub symmetric: bool,
    pub positive: bool,
}

impl HpdReport {
    pub fn passed(&self) -> bool {
        self.symmetric && self.positive
    }
}

/// Samples `n_samples` random pairs and checks symmetry (relative
/// tolerance 1e-12) and positivity of the operator.
pub fn verify_hpd(op: &dyn LinearOperator, n_samples: usize, seed: u64) -> HpdReport {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_sym: f64 = 0.0;
    let mut min_ray = f64::INFINITY;
    for _ in 0..n_samples {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hv = op.apply_vec(&v);
        let hw = op.apply_vec(&w);
        let scale = norm2(&hv) * norm2(&w) + norm2(&v) * norm2(&hw);
        if scale > 0.0 {
            max_sym = max_sym.max((dot(&hv, &w) - dot(&v, &hw)).abs() / scale);
        }
        let denom = norm2(&v) * norm2(&hv);
        let ray = if denom > 0.0 { dot(&hv, &v) / denom } else { 0.0 };
        min_ray = min_ray.min(ray);
    }
    HpdReport {
        samples: n_samples,
        max_symmetry_error: max_sym,
        min_rayleigh: min_ray,
        symmetric: max_sym <= 1e-12,
        positive: n_samples == 0 || min_ray > 0.0,
    }
}

/// Relative linearity defect `||Op(x+y) - Op x - Op y|| / (||Op x|| + ||Op y||)`
/// for random `x`, `y`.
pub fn linearity_defect(op: &dyn LinearOperator, seed: u64) -> f64 {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let (ox, oy, oxy) = (op.apply_vec(&x), op.apply_vec(&y), op.apply_vec(&xy));
    let defect: Vec<f64> = (0..n).map(|i| oxy[i] - ox[i] - oy[i]).collect();
    let scale = norm2(&ox) + norm2(&oy);
    if scale == 0.0 {
        norm2(&defect)
    } else {
        norm2(&defect) / scale
    }
}
