//! Weighted, right-preconditioned, deflated GMRES for real nonsymmetric
//! systems `A x = b` whose symmetric part is positive definite, together with
//! deflation spaces built from the pencil of the skew-symmetric and
//! symmetric parts of `A`, and diagnostics for the associated convergence
//! bounds.

pub mod deflation;
pub mod diagnostics;
pub mod eigenpencil;
pub mod error;
pub mod experiment;
pub mod gmres;
pub mod linalg;
pub mod operators;
pub mod problems;

pub use error::{Error, Result};
