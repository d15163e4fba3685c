use std::path::PathBuf;

use thiserror::Error;

use crate::eigenpencil::PencilEigenSet;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("matrix is not positive definite: pivot {pivot} = {value:e}{}", subdomain_suffix(.subdomain))]
    NotPositiveDefinite {
        pivot: usize,
        value: f64,
        subdomain: Option<usize>,
    },

    #[error("weight operator is not positive definite: <Wx,x> = {value:e}")]
    HpdViolation { value: f64 },

    #[error("coupling block Y^T A Z is singular or ill-conditioned (rcond = {rcond:e})")]
    SingularCouplingBlock { rcond: f64 },

    #[error("deflation basis is rank deficient: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("well-posedness check failed: {0}")]
    WellPosedness(String),

    #[error("not enough eigenpairs: requested {requested}, available {available}")]
    NotEnoughEigenpairs { requested: usize, available: usize },

    #[error("eigensolver did not converge: {} of {requested} pairs within {iterations} iterations", .partial.pairs.len())]
    PartialConvergence {
        partial: Box<PencilEigenSet>,
        requested: usize,
        iterations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn subdomain_suffix(subdomain: &Option<usize>) -> String {
    match subdomain {
        Some(s) => format!(" (subdomain {s})"),
        None => String::new(),
    }
}
