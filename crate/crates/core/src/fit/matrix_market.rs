//! Matrix Market exchange format (coordinate and array, real).

use std::fmt::Write as _;
use std::path::Path;

use super::SparseMatrix;
use crate::error::{Error, Result};

fn mm_err(msg: impl Into<String>) -> Error {
    Error::MatrixMarket(msg.into())
}

/// Coordinate/real/general text of `m`, 1-based indices.
pub fn matrix_to_string(m: &SparseMatrix) -> String {
    let mut s = String::with_capacity(32 * m.nnz() + 64);
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

/// Array/real/general text of a column vector.
pub fn vector_to_string(v: &[f64]) -> String {
    let mut s = String::with_capacity(24 * v.len() + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn write_matrix(m: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_to_string(m)).map_err(|e| Error::io(path, e))
}

pub fn write_vector(v: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, vector_to_string(v)).map_err(|e| Error::io(path, e))
}

struct Banner {
    coordinate: bool,
    symmetric: bool,
}

fn parse_banner(line: &str) -> Result<Banner> {
    let toks: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(mm_err(format!("bad banner '{line}'")));
    }
    let coordinate = match toks[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(mm_err(format!("unsupported format '{other}'"))),
    };
    if toks[3] != "real" && toks[3] != "integer" {
        return Err(mm_err(format!("unsupported field '{}'", toks[3])));
    }
    let symmetric = match toks[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(mm_err(format!("unsupported symmetry '{other}'"))),
    };
    Ok(Banner {
        coordinate,
        symmetric,
    })
}

fn data_lines(text: &str) -> Result<(Banner, impl Iterator<Item = &str>)> {
    let mut lines = text.lines();
    let banner = parse_banner(lines.next().ok_or_else(|| mm_err("empty file"))?)?;
    let rest = lines.filter(|l| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    Ok((banner, rest))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| mm_err(format!("missing {what}")))?
        .parse()
        .map_err(|_| mm_err(format!("cannot parse {what}")))
}

pub fn parse_matrix(text: &str) -> Result<SparseMatrix> {
    let (banner, mut lines) = data_lines(text)?;
    let size = lines.next().ok_or_else(|| mm_err("missing size line"))?;
    let mut it = size.split_whitespace();
    let nrows: usize = num(it.next(), "rows")?;
    let ncols: usize = num(it.next(), "cols")?;
    let mut triplets = Vec::new();
    if banner.coordinate {
        let nnz: usize = num(it.next(), "nnz")?;
        for _ in 0..nnz {
            let line = lines
                .next()
                .ok_or_else(|| mm_err("fewer entries than declared"))?;
            let mut t = line.split_whitespace();
            let i: usize = num(t.next(), "row index")?;
            let j: usize = num(t.next(), "column index")?;
            let v: f64 = num(t.next(), "value")?;
            if i == 0 || j == 0 {
                return Err(mm_err("indices are 1-based"));
            }
            triplets.push((i - 1, j - 1, v));
            if banner.symmetric && i != j {
                triplets.push((j - 1, i - 1, v));
            }
        }
    } else {
        for j in 0..ncols {
            for i in 0..nrows {
                let line = lines
                    .next()
                    .ok_or_else(|| mm_err("fewer values than declared"))?;
                triplets.push((i, j, num(Some(line.trim()), "value")?));
            }
        }
    }
    if lines.next().is_some() {
        return Err(mm_err("trailing data after declared entries"));
    }
    SparseMatrix::from_triplets(nrows, ncols, triplets).map_err(|e| mm_err(e.to_string()))
}

/// Reads an `n × 1` array file as a vector.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let (banner, mut lines) = data_lines(text)?;
    if banner.coordinate {
        return Err(mm_err("expected array format for a vector"));
    }
    let size = lines.next().ok_or_else(|| mm_err("missing size line"))?;
    let mut it = size.split_whitespace();
    let n: usize = num(it.next(), "rows")?;
    let cols: usize = num(it.next(), "cols")?;
    if cols != 1 {
        return Err(mm_err(format!("vector must have 1 column, got {cols}")));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| mm_err("fewer values than declared"))?;
        out.push(num(Some(line.trim()), "value")?);
    }
    Ok(out)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    parse_matrix(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    parse_vector(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
