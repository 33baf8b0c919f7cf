//! Matrix Market reading and writing.
//!
//! Sparse operators use the `coordinate real general|symmetric` format;
//! dense blocks (right-hand-side factors) use `array real general`.
//! Values are written with 17 significant digits so a round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::SparseError;
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    layout: Layout,
    symmetry: Symmetry,
}

fn format_err(msg: impl Into<String>) -> SparseError {
    SparseError::Format(msg.into())
}

fn parse_header(line: &str) -> Result<Header, SparseError> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(format_err(format!("malformed header line: {line:?}")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(format_err(format!("unsupported layout {other:?}"))),
    };
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(format_err(format!(
            "unsupported field {:?}; only real data is accepted",
            tokens[3]
        )));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(format_err(format!("unsupported symmetry {other:?}"))),
    };
    Ok(Header { layout, symmetry })
}

/// Splits the text into the header and the data lines (comments removed).
fn split_body(text: &str) -> Result<(Header, Vec<&str>), SparseError> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| format_err("empty file"))?;
    let header = parse_header(first)?;
    let body = lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .collect();
    Ok((header, body))
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize, SparseError> {
    tok.ok_or_else(|| format_err(format!("missing {what}")))?
        .parse()
        .map_err(|_| format_err(format!("invalid {what}")))
}

fn parse_f64(tok: Option<&str>) -> Result<f64, SparseError> {
    let v: f64 = tok
        .ok_or_else(|| format_err("missing value"))?
        .parse()
        .map_err(|_| format_err("invalid value"))?;
    if !v.is_finite() {
        return Err(format_err("non-finite value"));
    }
    Ok(v)
}

/// Parses a square sparse operator from Matrix Market text.
pub fn parse_matrix_market(text: &str) -> Result<SparseOperator, SparseError> {
    let (header, body) = split_body(text)?;
    if header.layout != Layout::Coordinate {
        return Err(format_err("operators must use the coordinate layout"));
    }
    let mut lines = body.into_iter();
    let size = lines
        .next()
        .ok_or_else(|| format_err("missing size line"))?;
    let mut tok = size.split_whitespace();
    let rows = parse_usize(tok.next(), "row count")?;
    let cols = parse_usize(tok.next(), "column count")?;
    let nnz = parse_usize(tok.next(), "entry count")?;
    if rows != cols {
        return Err(format_err(format!(
            "operator must be square, got {rows}x{cols}"
        )));
    }
    let mut triplets = Vec::with_capacity(if header.symmetry == Symmetry::Symmetric {
        2 * nnz
    } else {
        nnz
    });
    let mut seen = 0;
    for line in lines {
        let mut tok = line.split_whitespace();
        let i = parse_usize(tok.next(), "row index")?;
        let j = parse_usize(tok.next(), "column index")?;
        let v = parse_f64(tok.next())?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(format_err(format!("index ({i}, {j}) out of range")));
        }
        let (i, j) = (i - 1, j - 1);
        if header.symmetry == Symmetry::Symmetric {
            if j > i {
                return Err(format_err(
                    "symmetric file stores an upper-triangular entry",
                ));
            }
            if i != j {
                triplets.push((j, i, v));
            }
        }
        triplets.push((i, j, v));
        seen += 1;
    }
    if seen != nnz {
        return Err(format_err(format!("expected {nnz} entries, found {seen}")));
    }
    SparseOperator::from_triplets(rows, triplets)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseOperator, SparseError> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

/// Renders an operator; symmetric operators store their lower triangle.
pub fn format_matrix_market(a: &SparseOperator) -> String {
    let symmetric = a.is_symmetric();
    let entries: Vec<(usize, usize, f64)> = a
        .triplets()
        .filter(|(i, j, _)| !symmetric || j <= i)
        .collect();
    let mut out = String::with_capacity(32 * (entries.len() + 2));
    let kind = if symmetric { "symmetric" } else { "general" };
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real {kind}");
    let _ = writeln!(out, "{} {} {}", a.dim(), a.dim(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    out
}

pub fn write_matrix_market(a: &SparseOperator, path: impl AsRef<Path>) -> Result<(), SparseError> {
    fs::write(path, format_matrix_market(a))?;
    Ok(())
}

/// Parses a dense block stored in the array layout (column-major).
pub fn parse_dense(text: &str) -> Result<DMatrix<f64>, SparseError> {
    let (header, body) = split_body(text)?;
    if header.layout != Layout::Array || header.symmetry != Symmetry::General {
        return Err(format_err("dense blocks must use the array general layout"));
    }
    let mut lines = body.into_iter();
    let size = lines
        .next()
        .ok_or_else(|| format_err("missing size line"))?;
    let mut tok = size.split_whitespace();
    let rows = parse_usize(tok.next(), "row count")?;
    let cols = parse_usize(tok.next(), "column count")?;
    let values = lines
        .flat_map(str::split_whitespace)
        .map(|t| parse_f64(Some(t)))
        .collect::<Result<Vec<f64>, _>>()?;
    if values.len() != rows * cols {
        return Err(format_err(format!(
            "expected {} values, found {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(DMatrix::from_vec(rows, cols, values))
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<DMatrix<f64>, SparseError> {
    parse_dense(&fs::read_to_string(path)?)
}

pub fn format_dense(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(24 * (m.len() + 2));
    let _ = writeln!(out, "%%MatrixMarket matrix array real general");
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        let _ = writeln!(out, "{v:.16e}");
    }
    out
}

pub fn write_dense(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<(), SparseError> {
    fs::write(path, format_dense(m))?;
    Ok(())
}
