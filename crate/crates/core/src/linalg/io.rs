//! Matrix Market coordinate files and plain-text dense vectors / matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::csr::CsrMatrix;
use crate::linalg::dense::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a real (or integer / pattern) coordinate Matrix Market file.
/// Symmetric and skew-symmetric storage is expanded to the full matrix.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text, path)
}

pub fn parse_matrix_market(text: &str, path: &Path) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, "expected '%%MatrixMarket matrix ...' header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(path, 1, "only coordinate format is supported"));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "double" | "integer" => false,
        "pattern" => true,
        other => return Err(parse_err(path, 1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "skew-symmetric" => MmSymmetry::SkewSymmetric,
        other => {
            return Err(parse_err(path, 1, format!("unsupported symmetry '{other}'")))
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(path, lineno, "expected 'rows cols nnz'"));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(path, lineno, format!("bad size field '{s}'")))
                };
                size = Some((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
            }
            Some((rows, cols, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() != want {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("expected {want} fields, found {}", fields.len()),
                    ));
                }
                let index = |s: &str, bound: usize| -> Result<usize> {
                    let v = s
                        .parse::<usize>()
                        .map_err(|_| parse_err(path, lineno, format!("bad index '{s}'")))?;
                    if v == 0 || v > bound {
                        return Err(parse_err(
                            path,
                            lineno,
                            format!("index {v} outside 1..={bound}"),
                        ));
                    }
                    Ok(v - 1)
                };
                let i = index(fields[0], rows)?;
                let j = index(fields[1], cols)?;
                let v = if pattern {
                    1.0
                } else {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|_| parse_err(path, lineno, format!("bad value '{}'", fields[2])))?
                };
                match symmetry {
                    MmSymmetry::General => triplets.push((i, j, v)),
                    MmSymmetry::Symmetric => {
                        if j > i {
                            return Err(parse_err(path, lineno, "symmetric storage expects the lower triangle"));
                        }
                        triplets.push((i, j, v));
                        if i != j {
                            triplets.push((j, i, v));
                        }
                    }
                    MmSymmetry::SkewSymmetric => {
                        if j >= i {
                            return Err(parse_err(path, lineno, "skew-symmetric storage expects the strict lower triangle"));
                        }
                        triplets.push((i, j, v));
                        triplets.push((j, i, -v));
                    }
                }
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let stored = match symmetry {
        MmSymmetry::General => triplets.len(),
        MmSymmetry::Symmetric => {
            triplets.iter().filter(|t| t.0 >= t.1).count()
        }
        MmSymmetry::SkewSymmetric => triplets.len() / 2,
    };
    if stored != nnz {
        return Err(parse_err(
            path,
            1,
            format!("header announces {nnz} entries, found {stored}"),
        ));
    }
    CsrMatrix::from_triplets(rows, cols, &triplets)
}

/// Writes a coordinate Matrix Market file. Symmetric and skew-symmetric
/// matrices are stored as their lower triangle; values use round-trip
/// formatting so reading back reproduces them bit-exactly.
pub fn save_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<()> {
    fs::write(path, format_matrix_market(a))?;
    Ok(())
}

pub fn format_matrix_market(a: &CsrMatrix) -> String {
    let a = a.pruned();
    let symmetry = if a.is_square() && a.nnz() > 0 && a.is_symmetric() {
        MmSymmetry::Symmetric
    } else if a.is_square() && a.nnz() > 0 && a.is_skew_symmetric() {
        MmSymmetry::SkewSymmetric
    } else {
        MmSymmetry::General
    };
    let keep = |i: usize, j: usize| match symmetry {
        MmSymmetry::General => true,
        MmSymmetry::Symmetric => j <= i,
        MmSymmetry::SkewSymmetric => j < i,
    };
    let mut body = String::new();
    let mut count = 0;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if keep(i, j) {
                writeln!(body, "{} {} {:?}", i + 1, j + 1, v).unwrap();
                count += 1;
            }
        }
    }
    let qualifier = match symmetry {
        MmSymmetry::General => "general",
        MmSymmetry::Symmetric => "symmetric",
        MmSymmetry::SkewSymmetric => "skew-symmetric",
    };
    format!(
        "%%MatrixMarket matrix coordinate real {qualifier}\n{} {} {count}\n{body}",
        a.n_rows(),
        a.n_cols()
    )
}

/// One value per line.
pub fn save_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(v.len() * 24);
    for x in v {
        writeln!(s, "{x:?}").unwrap();
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let v = t
            .parse::<f64>()
            .map_err(|_| parse_err(path, idx + 1, format!("bad value '{t}'")))?;
        if !v.is_finite() {
            return Err(parse_err(path, idx + 1, "non-finite value"));
        }
        out.push(v);
    }
    Ok(out)
}

/// Dense matrix as whitespace-separated rows.
pub fn save_dense(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut s = String::new();
    for i in 0..a.n_rows() {
        let row: Vec<String> = (0..a.n_cols()).map(|j| format!("{:?}", a.get(i, j))).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn load_dense(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let row = t
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(path, idx + 1, format!("bad value '{f}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, idx + 1, "ragged row"));
            }
        }
        rows.push(row);
    }
    Ok(DenseMatrix::from_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(a: &CsrMatrix) -> CsrMatrix {
        parse_matrix_market(&format_matrix_market(a), Path::new("mem")).unwrap()
    }

    #[test]
    fn identity_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.mtx");
        save_matrix_market(&p, &CsrMatrix::identity(5)).unwrap();
        assert_eq!(load_matrix_market(&p).unwrap(), CsrMatrix::identity(5));
    }

    #[test]
    fn skew_qualifier_expands() {
        let text = "%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3.5\n";
        let a = parse_matrix_market(text, Path::new("mem")).unwrap();
        assert_eq!(a.get(1, 0), 3.5);
        assert_eq!(a.get(0, 1), -3.5);
        let skew = CsrMatrix::from_triplets(2, 2, &[(0, 1, -3.5), (1, 0, 3.5)]).unwrap();
        assert!(format_matrix_market(&skew).contains("skew-symmetric"));
        assert_eq!(roundtrip(&skew), skew);
    }

    #[test]
    fn out_of_range_index_reports_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n% c\n2 2 1\n3 1 1.0\n";
        match parse_matrix_market(text, Path::new("m.mtx")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let zero = "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n";
        assert!(parse_matrix_market(zero, Path::new("m.mtx")).is_err());
    }

    #[test]
    fn malformed_header() {
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n", Path::new("x")).is_err());
        assert!(parse_matrix_market("hello\n", Path::new("x")).is_err());
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(parse_matrix_market(short, Path::new("x")).is_err());
    }

    #[test]
    fn dense_and_vector_files() {
        let dir = tempfile::tempdir().unwrap();
        let v = vec![0.1, -2.5e-17, 3.0];
        save_vector(dir.path().join("v.txt"), &v).unwrap();
        assert_eq!(load_vector(dir.path().join("v.txt")).unwrap(), v);
        let d = DenseMatrix::from_rows(&[vec![1.0, 0.2], vec![-3.0, 1e-300]]);
        save_dense(dir.path().join("d.txt"), &d).unwrap();
        assert_eq!(load_dense(dir.path().join("d.txt")).unwrap(), d);
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            entries in proptest::collection::vec((0usize..6, 0usize..6, -1e3f64..1e3), 0..30),
            mode in 0u8..3,
        ) {
            let mut t = Vec::new();
            for &(i, j, v) in &entries {
                match mode {
                    0 => t.push((i, j, v)),
                    1 => { t.push((i, j, v)); if i != j { t.push((j, i, v)); } }
                    _ => if i != j { t.push((i, j, v)); t.push((j, i, -v)); },
                }
            }
            let a = CsrMatrix::from_triplets(6, 6, &t).unwrap().pruned();
            prop_assert_eq!(roundtrip(&a), a);
        }
    }
}
