//! One-level Additive Schwarz with an optional coarse correction.
//!
//! Without a coarse space the operator is `sum_s R_s^T (R_s M R_s^T)^{-1} R_s`.
//! With coarse basis `Phi = R_0^T` it becomes
//! `Pi (sum_s ...) Pi^T + Phi (Phi^T M Phi)^{-1} Phi^T`,
//! `Pi = I - Phi (Phi^T M Phi)^{-1} Phi^T M`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::dense::{dense_lu_factor, numerical_rank, DenseMatrix, LuFactor};
use crate::linalg::{sparse_cholesky, CholeskyFactor, CsrMatrix};
use crate::linalg::vector::{axpy, dot, norm2};
use crate::operators::LinearOperator;

/// Splits a structured `nx x ny` grid of unknowns (x fastest) into
/// `n_subdomains` rectangular blocks and grows each block by `overlap`
/// layers of the adjacency graph of `adjacency`'s sparsity pattern.
///
/// Returns sorted index sets, one per subdomain, in row-major block order.
pub fn partition_structured(
    grid: (usize, usize),
    n_subdomains: usize,
    overlap: usize,
    adjacency: &CsrMatrix,
) -> Result<Vec<Vec<usize>>> {
    let (nx, ny) = grid;
    let n = nx * ny;
    if adjacency.n_rows() != n || !adjacency.is_square() {
        return Err(Error::Config(format!(
            "adjacency is {}x{}, grid has {n} unknowns",
            adjacency.n_rows(),
            adjacency.n_cols()
        )));
    }
    if n_subdomains == 0 {
        return Err(Error::Config("n_subdomains must be positive".into()));
    }
    let (px, py) = split_counts(n_subdomains, nx, ny);
    if px > nx || py > ny {
        return Err(Error::Config(format!(
            "{px}x{py} subdomains leave empty blocks on a {nx}x{ny} grid"
        )));
    }
    let bounds = |count: usize, len: usize, b: usize| (b * len / count, (b + 1) * len / count);

    let mut sets = Vec::with_capacity(n_subdomains);
    for by in 0..py {
        let (y0, y1) = bounds(py, ny, by);
        for bx in 0..px {
            let (x0, x1) = bounds(px, nx, bx);
            let mut member = vec![false; n];
            let mut frontier = Vec::new();
            for y in y0..y1 {
                for x in x0..x1 {
                    member[y * nx + x] = true;
                    frontier.push(y * nx + x);
                }
            }
            if frontier.is_empty() {
                return Err(Error::Config(format!("subdomain ({bx}, {by}) is empty")));
            }
            for _ in 0..overlap {
                let mut next = Vec::new();
                for &u in &frontier {
                    for &v in adjacency.row(u).0 {
                        if !member[v] {
                            member[v] = true;
                            next.push(v);
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                frontier = next;
            }
            sets.push((0..n).filter(|&i| member[i]).collect());
        }
    }
    Ok(sets)
}

/// Keeps the columns that add to the span of the ones before them
/// (relative residual above 1e-10 after two Gram-Schmidt passes).
fn independent_columns(cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for c in cols {
        let norm = norm2(&c);
        let mut v = c.clone();
        for _ in 0..2 {
            for qk in &q {
                let d = dot(qk, &v);
                axpy(-d, qk, &mut v);
            }
        }
        let rest = norm2(&v);
        if rest > 1e-10 * norm {
            v.iter_mut().for_each(|x| *x /= rest);
            q.push(v);
            kept.push(c);
        } else {
            log::debug!("partition-of-unity coarse vector dropped as dependent");
        }
    }
    kept
}

/// Factor `count` into `px * py` with `py <= px` as square as possible,
/// putting the larger count along the longer axis.
fn split_counts(count: usize, nx: usize, ny: usize) -> (usize, usize) {
    let mut small = (count as f64).sqrt() as usize;
    while small > 1 && count % small != 0 {
        small -= 1;
    }
    let small = small.max(1);
    let large = count / small;
    if nx >= ny {
        (large, small)
    } else {
        (small, large)
    }
}

/// Coarse space choice.
#[derive(Debug, Clone)]
pub enum CoarseSpace {
    None,
    /// One vector per subdomain: the partition of unity `1 / multiplicity`
    /// restricted to that subdomain. Vectors in the span of earlier ones are
    /// dropped.
    PartitionOfUnity,
    /// User-supplied coarse vectors, one per column (`n x n_c`).
    Vectors(DenseMatrix),
}

#[derive(Debug, Clone)]
struct CoarseBlock {
    phi: DenseMatrix,
    m_phi: DenseMatrix,
    factor: LuFactor,
}

impl CoarseBlock {
    /// `(Phi^T M Phi)^{-1} Phi^T v`
    fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.factor.solve(&self.phi.tr_mul_vec(v))
    }
}

#[derive(Debug, Clone)]
pub struct SchwarzPreconditioner {
    n: usize,
    subdomains: Vec<Vec<usize>>,
    local: Vec<CholeskyFactor>,
    coarse: Option<CoarseBlock>,
    label: String,
}

/// Builds the Additive Schwarz operator for `m` on the given (sorted)
/// subdomain index sets.
pub fn additive_schwarz_op(
    m: &CsrMatrix,
    subdomains: Vec<Vec<usize>>,
    coarse: CoarseSpace,
) -> Result<SchwarzPreconditioner> {
    let n = m.n_rows();
    let mut multiplicity = vec![0usize; n];
    for set in &subdomains {
        for &i in set {
            if i >= n {
                return Err(Error::Config(format!("subdomain index {i} out of range")));
            }
            multiplicity[i] += 1;
        }
    }
    if let Some(i) = multiplicity.iter().position(|&c| c == 0) {
        return Err(Error::Config(format!("unknown {i} is not covered by any subdomain")));
    }

    let local = subdomains
        .par_iter()
        .enumerate()
        .map(|(s, set)| {
            sparse_cholesky(&m.principal_submatrix(set)).map_err(|e| match e {
                Error::NotPositiveDefinite { pivot, value, .. } => Error::NotPositiveDefinite {
                    pivot: set[pivot],
                    value,
                    subdomain: Some(s),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let phi = match coarse {
        CoarseSpace::None => None,
        CoarseSpace::PartitionOfUnity => {
            let cols: Vec<Vec<f64>> = subdomains
                .iter()
                .map(|set| {
                    let mut c = vec![0.0; n];
                    for &i in set {
                        c[i] = 1.0 / multiplicity[i] as f64;
                    }
                    c
                })
                .collect();
            Some(DenseMatrix::from_columns(n, &independent_columns(cols)))
        }
        CoarseSpace::Vectors(v) => {
            if v.n_rows() != n {
                return Err(Error::DimensionMismatch {
                    context: "coarse vectors",
                    expected: n,
                    found: v.n_rows(),
                });
            }
            Some(v)
        }
    };
    let coarse = match phi {
        Some(phi) if phi.n_cols() > 0 => {
            let rank = numerical_rank(&phi, 1e-10);
            if rank < phi.n_cols() {
                return Err(Error::RankDeficient {
                    rank,
                    expected: phi.n_cols(),
                });
            }
            let m_phi = m.mul_dense(&phi);
            let e0 = phi.tr_matmul(&m_phi);
            let factor = dense_lu_factor(&e0)?;
            Some(CoarseBlock { phi, m_phi, factor })
        }
        _ => None,
    };

    let label = format!(
        "schwarz({}{})",
        subdomains.len(),
        if coarse.is_some() { "+coarse" } else { "" }
    );
    Ok(SchwarzPreconditioner {
        n,
        subdomains,
        local,
        coarse,
        label,
    })
}

impl SchwarzPreconditioner {
    pub fn subdomains(&self) -> &[Vec<usize>] {
        &self.subdomains
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.phi.n_cols())
    }

    /// Coarse basis `Phi = R_0^T`, if present.
    pub fn coarse_basis(&self) -> Option<&DenseMatrix> {
        self.coarse.as_ref().map(|c| &c.phi)
    }

    /// Maximal number of subdomains any unknown belongs to.
    pub fn max_multiplicity(&self) -> usize {
        let mut mult = vec![0usize; self.n];
        for set in &self.subdomains {
            for &i in set {
                mult[i] += 1;
            }
        }
        mult.into_iter().max().unwrap_or(0)
    }

    /// `sum_s R_s^T (R_s M R_s^T)^{-1} R_s v`, summed in ascending subdomain order.
    fn one_level(&self, v: &[f64]) -> Vec<f64> {
        let locals: Vec<Vec<f64>> = self
            .subdomains
            .par_iter()
            .zip(self.local.par_iter())
            .map(|(set, f)| {
                let rv: Vec<f64> = set.iter().map(|&i| v[i]).collect();
                f.apply_inverse(&rv)
            })
            .collect();
        let mut out = vec![0.0; self.n];
        for (set, u) in self.subdomains.iter().zip(&locals) {
            for (&i, &x) in set.iter().zip(u) {
                out[i] += x;
            }
        }
        out
    }

    /// Partition dump: one line per subdomain, `s: i0 i1 ...`.
    pub fn partition_text(&self) -> String {
        let mut s = String::new();
        for (k, set) in self.subdomains.iter().enumerate() {
            let items: Vec<String> = set.iter().map(|i| i.to_string()).collect();
            s.push_str(&format!("{k}: {}\n", items.join(" ")));
        }
        s
    }
}

impl LinearOperator for SchwarzPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.coarse {
            None => y.copy_from_slice(&self.one_level(x)),
            Some(c) => {
                // Pi^T x
                let mut pt = x.to_vec();
                let s = c.solve(x);
                for (k, &sk) in s.iter().enumerate() {
                    for (p, &mp) in pt.iter_mut().zip(c.m_phi.column(k)) {
                        *p -= mp * sk;
                    }
                }
                let mut u = self.one_level(&pt);
                // Pi u = u - Phi E0^{-1} (M Phi)^T u
                let t = c.factor.solve(&c.m_phi.tr_mul_vec(&u));
                let correction = c.phi.mul_vec(&t);
                let coarse = c.phi.mul_vec(&s);
                for i in 0..self.n {
                    u[i] += coarse[i] - correction[i];
                }
                y.copy_from_slice(&u);
            }
        }
    }

    fn claims_hpd(&self) -> bool {
        true
    }

    fn label(&self) -> &str {
        &self.label
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector::{dot, norm2, sub};
    use crate::operators::{inverse_hermitian_op, verify_hpd};

    /// Pattern of a structured P1 mesh: 4-neighbours plus one diagonal.
    fn p1_like(nx: usize, ny: usize) -> CsrMatrix {
        let mut t = Vec::new();
        let id = |x: usize, y: usize| y * nx + x;
        for y in 0..ny {
            for x in 0..nx {
                t.push((id(x, y), id(x, y), 6.0));
                let mut link = |a: usize, b: usize| {
                    t.push((a, b, -1.0));
                    t.push((b, a, -1.0));
                };
                if x + 1 < nx {
                    link(id(x, y), id(x + 1, y));
                }
                if y + 1 < ny {
                    link(id(x, y), id(x, y + 1));
                }
                if x + 1 < nx && y + 1 < ny {
                    link(id(x, y), id(x + 1, y + 1));
                }
            }
        }
        CsrMatrix::from_triplets(nx * ny, nx * ny, &t).unwrap()
    }

    /// Membership by coordinates, independent of the BFS above.
    fn enumerate_block(nx: usize, x0: usize, x1: usize, y0: usize, y1: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for y in 0..4usize {
            for x in 0..4usize {
                // one ring in the 4-neighbour + (+1,+1)/(-1,-1) diagonal graph
                let inside = |xx: isize, yy: isize| {
                    xx >= x0 as isize && xx < x1 as isize && yy >= y0 as isize && yy < y1 as isize
                };
                let (xi, yi) = (x as isize, y as isize);
                let near = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)]
                    .iter()
                    .any(|(dx, dy)| inside(xi + dx, yi + dy));
                if near {
                    out.push(y * nx + x);
                }
            }
        }
        out
    }

    #[test]
    fn four_by_four_overlap_one() {
        let m = p1_like(4, 4);
        let sets = partition_structured((4, 4), 4, 1, &m).unwrap();
        assert_eq!(sets.len(), 4);
        assert_eq!(sets[0], enumerate_block(4, 0, 2, 0, 2));
        assert_eq!(sets[1], enumerate_block(4, 2, 4, 0, 2));
        assert_eq!(sets[2], enumerate_block(4, 0, 2, 2, 4));
        assert_eq!(sets[3], enumerate_block(4, 2, 4, 2, 4));
        let mut covered = vec![false; 16];
        for s in &sets {
            for &i in s {
                covered[i] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn single_subdomain_is_inverse() {
        let m = p1_like(5, 5);
        let sets = partition_structured((5, 5), 1, 1, &m).unwrap();
        assert_eq!(sets[0].len(), 25);
        let h = additive_schwarz_op(&m, sets, CoarseSpace::None).unwrap();
        let inv = inverse_hermitian_op(&m).unwrap();
        let v: Vec<f64> = (0..25).map(|i| (i as f64 * 0.7).cos()).collect();
        let d = sub(&h.apply_vec(&v), &inv.apply_vec(&v));
        assert!(norm2(&d) <= 1e-12 * norm2(&v));
    }

    #[test]
    fn saturated_overlap_covers_everything() {
        let m = p1_like(4, 4);
        let sets = partition_structured((4, 4), 4, 10, &m).unwrap();
        for s in sets {
            assert_eq!(s, (0..16).collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_subdomain_is_config_error() {
        let m = p1_like(2, 2);
        assert!(matches!(
            partition_structured((2, 2), 9, 1, &m),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn identity_counts_multiplicity() {
        let pattern = p1_like(6, 6);
        let sets = partition_structured((6, 6), 4, 1, &pattern).unwrap();
        let mut mult = vec![0.0; 36];
        for s in &sets {
            for &i in s {
                mult[i] += 1.0;
            }
        }
        let h = additive_schwarz_op(&CsrMatrix::identity(36), sets, CoarseSpace::None).unwrap();
        let v: Vec<f64> = (0..36).map(|i| i as f64 - 3.0).collect();
        let hv = h.apply_vec(&v);
        for i in 0..36 {
            assert_eq!(hv[i], mult[i] * v[i]);
        }
    }

    #[test]
    fn symmetric_positive_with_and_without_coarse() {
        let m = p1_like(8, 8);
        for coarse in [CoarseSpace::None, CoarseSpace::PartitionOfUnity] {
            let sets = partition_structured((8, 8), 4, 1, &m).unwrap();
            let h = additive_schwarz_op(&m, sets, coarse).unwrap();
            let rep = verify_hpd(&h, 50, 9);
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn coarse_equations_solved_exactly() {
        let m = p1_like(8, 8);
        let sets = partition_structured((8, 8), 4, 1, &m).unwrap();
        let h = additive_schwarz_op(&m, sets, CoarseSpace::PartitionOfUnity).unwrap();
        assert_eq!(h.coarse_dim(), 4);
        let phi = h.coarse_basis().unwrap().clone();
        let v: Vec<f64> = (0..64).map(|i| ((i * 13 % 7) as f64) - 2.5).collect();
        // R_0 (v - M H v) = 0
        let r = sub(&v, &m.spmv(&h.apply_vec(&v)));
        let c = phi.tr_mul_vec(&r);
        assert!(norm2(&c) <= 1e-10 * norm2(&phi.tr_mul_vec(&v)));
        assert!(dot(&h.apply_vec(&v), &v) > 0.0);
    }

    #[test]
    fn local_failure_names_subdomain() {
        let mut m = p1_like(4, 4).to_dense();
        m.set(15, 15, -10.0);
        let m = CsrMatrix::from_dense(&m);
        let sets = partition_structured((4, 4), 4, 0, &m).unwrap();
        match additive_schwarz_op(&m, sets, CoarseSpace::None) {
            Err(Error::NotPositiveDefinite { subdomain, .. }) => assert_eq!(subdomain, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
