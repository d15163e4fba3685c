use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Triangulation of `[-1, 1]^2`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// Cells per axis.
    pub k: usize,
}

/// Uniform `k x k` grid on `[-1, 1]^2`, each cell cut along its
/// lower-left to upper-right diagonal. Vertex `(i, j)` has index
/// `j (k + 1) + i`.
pub fn structured_mesh(k: usize) -> Result<TriMesh> {
    if k == 0 {
        return Err(Error::InvalidArgument("mesh needs at least one cell per axis".into()));
    }
    let nv = k + 1;
    let h = 2.0 / k as f64;
    let mut vertices = Vec::with_capacity(nv * nv);
    let mut boundary = Vec::with_capacity(nv * nv);
    for j in 0..nv {
        for i in 0..nv {
            vertices.push([-1.0 + h * i as f64, -1.0 + h * j as f64]);
            boundary.push(i == 0 || j == 0 || i == k || j == k);
        }
    }
    let mut triangles = Vec::with_capacity(2 * k * k);
    for j in 0..k {
        for i in 0..k {
            let v00 = j * nv + i;
            let v10 = v00 + 1;
            let v01 = v00 + nv;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Ok(TriMesh { vertices, triangles, boundary, k })
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Signed area of triangle `t`.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Vertex indices of the interior (non-boundary) vertices, ascending.
    /// On the structured mesh this orders unknowns row by row, x fastest.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.boundary[v]).collect()
    }

    /// Writes `vertices.txt` (`x y boundary`) and `triangles.txt` (`a b c`).
    pub fn write_tables(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut v = String::new();
        for (p, &b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(v, "{:?} {:?} {}", p[0], p[1], u8::from(b));
        }
        std::fs::write(dir.join("vertices.txt"), v)?;
        let mut t = String::new();
        for tri in &self.triangles {
            let _ = writeln!(t, "{} {} {}", tri[0], tri[1], tri[2]);
        }
        std::fs::write(dir.join("triangles.txt"), t)?;
        Ok(())
    }
}
