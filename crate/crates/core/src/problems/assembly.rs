//! P1 assembly of `c0 u - nu Lap u + a . grad u` with homogeneous Dirichlet
//! conditions eliminated.

use crate::error::{Error, Result};
use crate::linalg::{sparse_cholesky, CsrMatrix};
use crate::problems::mesh::TriMesh;

/// Convection direction `pi (-y - 0.8, x)`; the physical field is `eta` times this.
pub fn convection_field(x: f64, y: f64) -> [f64; 2] {
    let pi = std::f64::consts::PI;
    [pi * (-y - 0.8), pi * x]
}

/// Default source `exp(-2.5 (x^2 + (y + 0.8)^2))`.
pub fn default_source(x: f64, y: f64) -> f64 {
    (-2.5 * (x * x + (y + 0.8) * (y + 0.8))).exp()
}

#[derive(Debug, Clone)]
pub struct AssembledProblem {
    /// `int c0 phi_i phi_j + nu grad phi_i . grad phi_j`
    pub m: CsrMatrix,
    /// Skew convection matrix for unit `eta`.
    pub n_tilde: CsrMatrix,
    pub eta: f64,
    pub b: Vec<f64>,
    /// Mesh vertex of every unknown.
    pub dof_map: Vec<usize>,
    pub c0: f64,
    pub nu: f64,
    /// Cells per axis of the generating mesh.
    pub k: usize,
}

impl AssembledProblem {
    pub fn n(&self) -> usize {
        self.dof_map.len()
    }

    /// `A = M + eta N~`
    pub fn a(&self) -> CsrMatrix {
        self.m
            .add_scaled(1.0, &self.n_tilde, self.eta)
            .expect("M and N~ share dimensions")
    }

    /// Skew-symmetric part of `A`, `eta N~`.
    pub fn skew_part(&self) -> CsrMatrix {
        self.n_tilde.scaled(self.eta)
    }

    /// Interior grid dimensions `(nx, ny)` of a structured mesh.
    pub fn grid(&self) -> (usize, usize) {
        let s = self.k.saturating_sub(1);
        (s, s)
    }
}

struct Element {
    area: f64,
    grads: [[f64; 2]; 3],
    /// Edge midpoints with the two local vertices of each edge.
    mids: [([f64; 2], [usize; 2]); 3],
}

fn element(mesh: &TriMesh, t: usize) -> Result<Element> {
    let tri = mesh.triangles[t];
    let p = tri.map(|v| mesh.vertices[v]);
    let area = mesh.signed_area(t);
    if !(area > 0.0) {
        return Err(Error::InvalidStructure(format!("triangle {t} is inverted or degenerate")));
    }
    let mut grads = [[0.0; 2]; 3];
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        grads[a] = [(p[b][1] - p[c][1]) / (2.0 * area), (p[c][0] - p[b][0]) / (2.0 * area)];
    }
    let mid = |a: usize, b: usize| [0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])];
    let mids = [(mid(0, 1), [0, 1]), (mid(1, 2), [1, 2]), (mid(2, 0), [2, 0])];
    Ok(Element { area, grads, mids })
}

/// Local convection matrix `C_ab = int (a . grad phi_a) phi_b` by the
/// edge-midpoint rule, exact for the linear field used here.
fn local_convection(e: &Element, field: &dyn Fn(f64, f64) -> [f64; 2]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for (q, verts) in &e.mids {
        let f = field(q[0], q[1]);
        for a in 0..3 {
            let adv = f[0] * e.grads[a][0] + f[1] * e.grads[a][1];
            for &b in verts {
                // phi_b(q) = 1/2 on the two vertices of the edge
                c[a][b] += e.area / 3.0 * adv * 0.5;
            }
        }
    }
    c
}

/// Interior numbering: `None` on boundary vertices.
fn numbering(mesh: &TriMesh) -> (Vec<usize>, Vec<Option<usize>>) {
    let dof_map = mesh.interior_vertices();
    let mut index = vec![None; mesh.n_vertices()];
    for (d, &v) in dof_map.iter().enumerate() {
        index[v] = Some(d);
    }
    (dof_map, index)
}

/// Assembles `M`, `N~` and the default right-hand side.
pub fn assemble_cdr(mesh: &TriMesh, c0: f64, nu: f64, eta: f64) -> Result<AssembledProblem> {
    if !(c0 > 0.0 && nu > 0.0) {
        return Err(Error::InvalidArgument(format!("c0 = {c0} and nu = {nu} must be positive")));
    }
    if !eta.is_finite() {
        return Err(Error::InvalidArgument("eta must be finite".into()));
    }
    let (dof_map, index) = numbering(mesh);
    if dof_map.is_empty() {
        return Err(Error::InvalidArgument("mesh has no interior unknowns".into()));
    }
    let n = dof_map.len();
    let mut mt = Vec::new();
    let mut nt = Vec::new();
    for t in 0..mesh.triangles.len() {
        let e = element(mesh, t)?;
        let conv = local_convection(&e, &convection_field);
        let tri = mesh.triangles[t];
        for a in 0..3 {
            let Some(i) = index[tri[a]] else { continue };
            for b in 0..3 {
                let Some(j) = index[tri[b]] else { continue };
                let mass = e.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                let stiff = e.area * (e.grads[a][0] * e.grads[b][0] + e.grads[a][1] * e.grads[b][1]);
                mt.push((i, j, c0 * mass + nu * stiff));
                if a != b {
                    nt.push((i, j, 0.5 * (conv[a][b] - conv[b][a])));
                }
            }
        }
    }
    let m = CsrMatrix::from_triplets(n, n, &mt)?;
    // Mirror one triangle so that symmetry and skewness hold exactly.
    let m = mirror(&m, 1.0)?;
    let n_tilde = mirror(&CsrMatrix::from_triplets(n, n, &nt)?, -1.0)?;
    sparse_cholesky(&m)?;
    let b = assemble_rhs(mesh, &default_source);
    Ok(AssembledProblem {
        m,
        n_tilde,
        eta,
        b,
        dof_map,
        c0,
        nu,
        k: mesh.k,
    })
}

/// Rebuilds `x` from its lower triangle (including the diagonal), with the
/// upper triangle set to `sign` times the mirrored entries.
fn mirror(x: &CsrMatrix, sign: f64) -> Result<CsrMatrix> {
    let n = x.n_rows();
    let mut t = Vec::with_capacity(x.nnz());
    for i in 0..n {
        let (cols, vals) = x.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j < i {
                t.push((i, j, v));
                t.push((j, i, sign * v));
            } else if j == i && sign > 0.0 {
                t.push((i, i, v));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// Load vector `int f phi_i` over interior vertices, edge-midpoint rule.
pub fn assemble_rhs(mesh: &TriMesh, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let (dof_map, index) = numbering(mesh);
    let mut b = vec![0.0; dof_map.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let Ok(e) = element(mesh, t) else { continue };
        for (q, verts) in &e.mids {
            let w = e.area / 3.0 * f(q[0], q[1]) * 0.5;
            for &a in verts {
                if let Some(i) = index[tri[a]] {
                    b[i] += w;
                }
            }
        }
    }
    b
}

/// Generated model problem on the structured `k x k` mesh.
pub fn model_problem(k: usize, c0: f64, nu: f64, eta: f64) -> Result<AssembledProblem> {
    let mesh = crate::problems::structured_mesh(k)?;
    assemble_cdr(&mesh, c0, nu, eta)
}
