//! Convection–diffusion–reaction model problem on `[-1, 1]^2` and problem
//! bundles on disk.

mod assembly;
mod mesh;

pub use assembly::{
    assemble_cdr, assemble_rhs, convection_field, default_source, model_problem, AssembledProblem,
};
pub use mesh::{structured_mesh, TriMesh};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::io::{load_matrix_market, load_vector, save_matrix_market, save_vector};
use crate::linalg::CsrMatrix;

/// Contents of `meta.toml` in a problem bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub c0: f64,
    pub nu: f64,
    pub eta: f64,
    pub k: usize,
}

/// Writes `M.mtx`, `N.mtx` (unit-`eta` skew part), `b.txt` and `meta.toml`.
pub fn save_bundle(dir: impl AsRef<Path>, p: &AssembledProblem) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    save_matrix_market(dir.join("M.mtx"), &p.m)?;
    save_matrix_market(dir.join("N.mtx"), &p.n_tilde)?;
    save_vector(dir.join("b.txt"), &p.b)?;
    let meta = BundleMeta { c0: p.c0, nu: p.nu, eta: p.eta, k: p.k };
    let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("meta.toml"), text)?;
    Ok(())
}

/// Reads a bundle written by [`save_bundle`].
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<(CsrMatrix, CsrMatrix, Vec<f64>, BundleMeta)> {
    let dir = dir.as_ref();
    let m = load_matrix_market(dir.join("M.mtx"))?;
    let n = load_matrix_market(dir.join("N.mtx"))?;
    let b = load_vector(dir.join("b.txt"))?;
    let text = std::fs::read_to_string(dir.join("meta.toml"))?;
    let meta: BundleMeta = toml::from_str(&text).map_err(|e| Error::Config(format!("meta.toml: {e}")))?;
    Ok((m, n, b, meta))
}
