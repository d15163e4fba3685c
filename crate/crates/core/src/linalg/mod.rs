//! Sparse and small dense linear algebra kernels.

pub mod cholesky;
pub mod csr;
pub mod dense;
pub mod io;
pub mod vector;

pub use cholesky::{sparse_cholesky, CholeskyFactor};
pub use csr::{split_hermitian_skew, CsrMatrix};
pub use dense::{dense_lu_factor, dense_lu_solve, numerical_rank, DenseMatrix, LuFactor};
pub use vector::ComplexVector;

use crate::error::{Error, Result};
use crate::operators::LinearOperator;

/// `<W x, y>` for an hpd weight operator `W`.
pub fn w_inner(w: &dyn LinearOperator, x: &[f64], y: &[f64]) -> Result<f64> {
    check_weight(w, x.len())?;
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "w_inner",
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(vector::dot(&w.apply_vec(x), y))
}

/// `sqrt(<W x, x>)`; fails if the quadratic form is negative beyond
/// round-off (`-1e-12 ||x||^2`).
pub fn w_norm(w: &dyn LinearOperator, x: &[f64]) -> Result<f64> {
    let q = w_inner(w, x, x)?;
    if q < -1e-12 * vector::dot(x, x) {
        return Err(Error::HpdViolation { value: q });
    }
    Ok(q.max(0.0).sqrt())
}

fn check_weight(w: &dyn LinearOperator, n: usize) -> Result<()> {
    if !w.claims_hpd() {
        return Err(Error::InvalidArgument(format!(
            "weight operator '{}' is not declared hpd",
            w.label()
        )));
    }
    if w.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "w_inner",
            expected: w.dim(),
            found: n,
        });
    }
    Ok(())
}
