//! Deflation projectors
//! `P_D = I - A Z E^{-1} Y^T`, `Q_D = I - Z E^{-1} Y^T A`, `E = Y^T A Z`,
//! and the split of `A x = b` into a direct part and a projected part.

use crate::error::{Error, Result};
use crate::linalg::dense::least_squares;
use crate::linalg::vector::norm2;
use crate::linalg::{dense_lu_factor, numerical_rank, CsrMatrix, DenseMatrix, LuFactor};
use crate::operators::LinearOperator;

/// Minimal reciprocal condition number accepted for `E = Y^T A Z`.
pub const RCOND_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeflationMode {
    /// `Y = H A Z`
    HOrthogonal,
    /// `Y = Z` spanning an `M^{-1} A^T`-invariant space.
    Invariant,
    Custom,
}

#[derive(Debug, Clone)]
pub struct DeflationPair {
    n: usize,
    z: DenseMatrix,
    y: DenseMatrix,
    az: DenseMatrix,
    /// `A^T Y`, so that `Y^T A v = (A^T Y)^T v`.
    aty: DenseMatrix,
    e: Option<LuFactor>,
    mode: DeflationMode,
    invariance_residual: Option<f64>,
}

fn check_rows(a: &CsrMatrix, x: &DenseMatrix, what: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.n_rows(), cols: a.n_cols() });
    }
    if x.n_rows() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: a.n_rows(),
            found: x.n_rows(),
        });
    }
    Ok(())
}

fn check_rank(x: &DenseMatrix) -> Result<()> {
    let rank = numerical_rank(x, 1e-10);
    if rank < x.n_cols() {
        return Err(Error::RankDeficient { rank, expected: x.n_cols() });
    }
    Ok(())
}

fn apply_columns(op: &dyn LinearOperator, x: &DenseMatrix) -> DenseMatrix {
    let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| op.apply_vec(x.column(j))).collect();
    DenseMatrix::from_columns(x.n_rows(), &cols)
}

impl DeflationPair {
    /// Empty deflation space: both projectors are the identity.
    pub fn null(n: usize) -> Self {
        Self {
            n,
            z: DenseMatrix::zeros(n, 0),
            y: DenseMatrix::zeros(n, 0),
            az: DenseMatrix::zeros(n, 0),
            aty: DenseMatrix::zeros(n, 0),
            e: None,
            mode: DeflationMode::Custom,
            invariance_residual: None,
        }
    }

    fn assemble(a: &CsrMatrix, y: DenseMatrix, z: DenseMatrix, mode: DeflationMode) -> Result<Self> {
        let n = a.n_rows();
        if z.n_cols() == 0 {
            let mut p = Self::null(n);
            p.mode = mode;
            return Ok(p);
        }
        let az = a.mul_dense(&z);
        let aty = a.transpose().mul_dense(&y);
        let e = y.tr_matmul(&az);
        let factor = dense_lu_factor(&e)?;
        if !(factor.rcond() >= RCOND_MIN) {
            return Err(Error::SingularCouplingBlock { rcond: factor.rcond() });
        }
        Ok(Self {
            n,
            z,
            y,
            az,
            aty,
            e: Some(factor),
            mode,
            invariance_residual: None,
        })
    }

    /// `Y = H A Z`. Only invertibility of `E` needs checking in this mode.
    pub fn build_h_orthogonal(a: &CsrMatrix, h: &dyn LinearOperator, z: DenseMatrix) -> Result<Self> {
        check_rows(a, &z, "deflation basis Z")?;
        check_rank(&z)?;
        let y = apply_columns(h, &a.mul_dense(&z));
        Self::assemble(a, y, z, DeflationMode::HOrthogonal)
    }

    /// `Y = Z` for use with `H = M^{-1}`. Checks that `Z^T M Z` is
    /// invertible and records how far `span Z` is from being invariant under
    /// `H A^T`.
    pub fn build_invariant(
        a: &CsrMatrix,
        m: &CsrMatrix,
        h: &dyn LinearOperator,
        z: DenseMatrix,
    ) -> Result<Self> {
        check_rows(a, &z, "deflation basis Z")?;
        check_rank(&z)?;
        if z.n_cols() > 0 {
            let g = z.tr_matmul(&m.mul_dense(&z));
            let f = dense_lu_factor(&g)
                .map_err(|_| Error::WellPosedness("Z^T M Z is singular".into()))?;
            if f.rcond() < RCOND_MIN {
                return Err(Error::WellPosedness(format!(
                    "Z^T M Z is ill-conditioned (rcond {:e})",
                    f.rcond()
                )));
            }
        }
        let mut pair = Self::assemble(a, z.clone(), z, DeflationMode::Invariant)?;
        if pair.dim() > 0 {
            let hatz = apply_columns(h, &pair.aty);
            let coeff = least_squares(&pair.z, &hatz)?;
            let fit = pair.z.matmul(&coeff);
            let mut diff = 0.0f64;
            for j in 0..fit.n_cols() {
                let d: Vec<f64> = fit.column(j).iter().zip(hatz.column(j)).map(|(p, q)| p - q).collect();
                diff += norm2(&d).powi(2);
            }
            pair.invariance_residual = Some(diff.sqrt() / hatz.frobenius_norm().max(f64::MIN_POSITIVE));
        }
        Ok(pair)
    }

    /// Arbitrary `Y`, `Z` subject only to invertibility of `E`.
    pub fn build_custom(a: &CsrMatrix, y: DenseMatrix, z: DenseMatrix) -> Result<Self> {
        check_rows(a, &z, "deflation basis Z")?;
        check_rows(a, &y, "deflation basis Y")?;
        if y.n_cols() != z.n_cols() {
            return Err(Error::DimensionMismatch {
                context: "deflation Y/Z columns",
                expected: z.n_cols(),
                found: y.n_cols(),
            });
        }
        check_rank(&z)?;
        check_rank(&y)?;
        Self::assemble(a, y, z, DeflationMode::Custom)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rank `m` of the deflation space.
    pub fn dim(&self) -> usize {
        self.z.n_cols()
    }

    pub fn mode(&self) -> DeflationMode {
        self.mode
    }

    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn y(&self) -> &DenseMatrix {
        &self.y
    }

    pub fn az(&self) -> &DenseMatrix {
        &self.az
    }

    pub fn rcond(&self) -> Option<f64> {
        self.e.as_ref().map(|f| f.rcond())
    }

    /// Relative least-squares residual of `H A^T Z` against `span Z`
    /// (invariant mode only).
    pub fn invariance_residual(&self) -> Option<f64> {
        self.invariance_residual
    }

    /// `E^{-1} c`
    fn solve_e(&self, c: &[f64]) -> Vec<f64> {
        self.e.as_ref().map_or_else(Vec::new, |f| f.solve(c))
    }

    /// `P_D v = v - A Z E^{-1} Y^T v`
    pub fn apply_pd(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.apply_pd_in_place(&mut out);
        out
    }

    pub fn apply_pd_in_place(&self, v: &mut [f64]) {
        if self.dim() == 0 {
            return;
        }
        let s = self.solve_e(&self.y.tr_mul_vec(v));
        let corr = self.az.mul_vec(&s);
        v.iter_mut().zip(&corr).for_each(|(a, c)| *a -= c);
    }

    /// `Q_D v = v - Z E^{-1} Y^T A v`
    pub fn apply_qd(&self, v: &[f64]) -> Vec<f64> {
        if self.dim() == 0 {
            return v.to_vec();
        }
        let s = self.solve_e(&self.aty.tr_mul_vec(v));
        let corr = self.z.mul_vec(&s);
        v.iter().zip(&corr).map(|(a, c)| a - c).collect()
    }

    /// `(I - Q_D) x* = Z E^{-1} Y^T b`
    pub fn direct_component(&self, b: &[f64]) -> Vec<f64> {
        if self.dim() == 0 {
            return vec![0.0; b.len()];
        }
        self.z.mul_vec(&self.solve_e(&self.y.tr_mul_vec(b)))
    }

    /// `x = Q_D x~ + Z E^{-1} Y^T b`
    pub fn recombine(&self, x_tilde: &[f64], b: &[f64]) -> Vec<f64> {
        let q = self.apply_qd(x_tilde);
        let d = self.direct_component(b);
        q.iter().zip(&d).map(|(a, b)| a + b).collect()
    }

    /// `Y^T v`, which vanishes exactly on `range(P_D)`.
    pub fn y_transpose_apply(&self, v: &[f64]) -> Vec<f64> {
        self.y.tr_mul_vec(v)
    }
}
