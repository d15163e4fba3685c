use crate::eigenpencil::PencilEigenSet;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, DenseMatrix};

/// Real basis `[Re z_1 .. Re z_{m/2}, Im z_1 .. Im z_{m/2}]` built from the
/// `m/2` leading eigenvectors with `mu > 0`.
pub fn real_deflation_basis(set: &PencilEigenSet, m: usize) -> Result<DenseMatrix> {
    if m % 2 != 0 {
        return Err(Error::InvalidArgument(format!("deflation rank {m} must be even")));
    }
    let n = set.pairs.first().map_or(0, |p| p.vector.len());
    if m == 0 {
        return Ok(DenseMatrix::zeros(n, 0));
    }
    let half = m / 2;
    let chosen: Vec<_> = set.pairs.iter().filter(|p| p.mu > 0.0).take(half).collect();
    if chosen.len() < half {
        return Err(Error::NotEnoughEigenpairs {
            requested: half,
            available: chosen.len(),
        });
    }
    let mut cols: Vec<Vec<f64>> = chosen.iter().map(|p| p.vector.re.clone()).collect();
    cols.extend(chosen.iter().map(|p| p.vector.im.clone()));
    let basis = DenseMatrix::from_columns(n, &cols);
    let rank = numerical_rank(&basis, 1e-10);
    if rank < m {
        return Err(Error::RankDeficient { rank, expected: m });
    }
    Ok(basis)
}

/// Threshold `tau = |mu_{m+1}|`. `exhausted` is set when the set holds at
/// most `m` entries, in which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tau {
    pub value: f64,
    pub exhausted: bool,
}

pub fn tau_of(set: &PencilEigenSet, m: usize) -> Tau {
    match set.pairs.get(m) {
        Some(p) => Tau { value: p.mu.abs(), exhausted: false },
        None => Tau { value: 0.0, exhausted: true },
    }
}
