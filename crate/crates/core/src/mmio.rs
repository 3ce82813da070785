//! Matrix Market reading and writing (real, general; coordinate and array).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sparse_to_string(m: &SparseMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, format_f64(v));
    }
    s
}

pub fn dense_to_string(m: &DMatrix<f64>) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    // Array format is column-major, matching nalgebra storage.
    for v in m.iter() {
        let _ = writeln!(s, "{}", format_f64(*v));
    }
    s
}

pub fn write_sparse(path: &Path, m: &SparseMatrix) -> Result<()> {
    fs::write(path, sparse_to_string(m))?;
    Ok(())
}

pub fn write_dense(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, dense_to_string(m))?;
    Ok(())
}

enum Parsed {
    Sparse(SparseMatrix),
    Dense(DMatrix<f64>),
}

fn parse(text: &str) -> Result<Parsed> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?
        .to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse(format!("bad Matrix Market header: {header}")));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::Parse(format!("unsupported field type {}", fields[3])));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };
    let mut body = lines.filter(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let size_line = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size token {t}"))))
        .collect::<Result<_>>()?;
    let num = |t: &str| -> Result<f64> { t.parse().map_err(|_| Error::Parse(format!("bad number {t}"))) };
    match fields[2] {
        "coordinate" => {
            let [nr, nc, nnz] = sizes[..] else {
                return Err(Error::Parse("coordinate size line needs 3 entries".into()));
            };
            let mut trip = Vec::with_capacity(nnz);
            for line in body.take(nnz) {
                let t: Vec<&str> = line.split_whitespace().collect();
                if t.len() < 3 {
                    return Err(Error::Parse(format!("bad entry line: {line}")));
                }
                let i: usize = t[0].parse().map_err(|_| Error::Parse(format!("bad index {}", t[0])))?;
                let j: usize = t[1].parse().map_err(|_| Error::Parse(format!("bad index {}", t[1])))?;
                if i == 0 || j == 0 {
                    return Err(Error::Parse("Matrix Market indices are 1-based".into()));
                }
                let v = num(t[2])?;
                trip.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
            if trip.len() < nnz {
                return Err(Error::Parse("fewer entries than declared".into()));
            }
            Ok(Parsed::Sparse(SparseMatrix::from_triplets(nr, nc, trip)?))
        }
        "array" => {
            let [nr, nc] = sizes[..] else {
                return Err(Error::Parse("array size line needs 2 entries".into()));
            };
            let vals: Vec<f64> = body
                .flat_map(|l| l.split_whitespace())
                .map(num)
                .collect::<Result<_>>()?;
            if vals.len() != nr * nc {
                return Err(Error::Parse(format!("expected {} values, found {}", nr * nc, vals.len())));
            }
            Ok(Parsed::Dense(DMatrix::from_column_slice(nr, nc, &vals)))
        }
        other => Err(Error::Parse(format!("unsupported format {other}"))),
    }
}

/// Reads either format into sparse storage.
pub fn read_sparse(path: &Path) -> Result<SparseMatrix> {
    match parse(&fs::read_to_string(path)?)? {
        Parsed::Sparse(m) => Ok(m),
        Parsed::Dense(d) => Ok(SparseMatrix::from_dense(&d)),
    }
}

/// Reads either format into dense storage.
pub fn read_dense(path: &Path) -> Result<DMatrix<f64>> {
    match parse(&fs::read_to_string(path)?)? {
        Parsed::Sparse(m) => Ok(m.to_dense()),
        Parsed::Dense(d) => Ok(d),
    }
}
