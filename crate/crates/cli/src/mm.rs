//! Matrix Market reading (coordinate and array, real or integer, general,
//! symmetric or skew-symmetric) and writing (coordinate real general).

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use mplab_core::dense::DenseMatrix;
use mplab_core::sparse::CsrMatrix;
use thiserror::Error;

use crate::Matrix;

#[derive(Debug, Error)]
pub enum MmError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported Matrix Market field: {0}")]
    UnsupportedField(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> MmError {
    MmError::Parse { line, msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<Matrix, MmError> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

/// Coordinate files become [`Matrix::Sparse`], array files [`Matrix::Dense`].
/// Symmetric storage is expanded and duplicate coordinates are summed.
pub fn parse_matrix_market(text: &str) -> Result<Matrix, MmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (layout, symmetry) = parse_header(hline, header)?;

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sline, size) = data.next().ok_or_else(|| parse_err(hline, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(sline, format!("invalid size `{t}`"))))
        .collect::<Result<_, _>>()?;

    match layout {
        Layout::Coordinate => {
            let [m, n, nnz] = dims[..] else {
                return Err(parse_err(sline, "coordinate size line needs rows, columns and entries"));
            };
            if symmetry != Symmetry::General && m != n {
                return Err(parse_err(sline, "symmetric storage requires a square matrix"));
            }
            let mut trip = Vec::with_capacity(nnz * 2);
            let mut count = 0;
            for (line, l) in data {
                let tok: Vec<&str> = l.split_whitespace().collect();
                if tok.len() != 3 {
                    return Err(parse_err(line, "expected `row column value`"));
                }
                let i = parse_index(line, tok[0], m)?;
                let j = parse_index(line, tok[1], n)?;
                let v = parse_value(line, tok[2])?;
                count += 1;
                if count > nnz {
                    return Err(parse_err(line, format!("more than the declared {nnz} entries")));
                }
                match symmetry {
                    Symmetry::General => trip.push((i, j, v)),
                    Symmetry::Symmetric | Symmetry::Skew => {
                        if j > i {
                            return Err(parse_err(line, "symmetric storage lists the lower triangle only"));
                        }
                        if i == j && symmetry == Symmetry::Skew && v != 0.0 {
                            return Err(parse_err(line, "skew-symmetric diagonal must be zero"));
                        }
                        trip.push((i, j, v));
                        if i != j {
                            trip.push((j, i, if symmetry == Symmetry::Skew { -v } else { v }));
                        }
                    }
                }
            }
            if count != nnz {
                return Err(parse_err(sline, format!("declared {nnz} entries, found {count}")));
            }
            let a = CsrMatrix::from_triplets(m, n, &trip).map_err(|e| parse_err(sline, e.to_string()))?;
            Ok(Matrix::Sparse(a))
        }
        Layout::Array => {
            let [m, n] = dims[..] else {
                return Err(parse_err(sline, "array size line needs rows and columns"));
            };
            if symmetry != Symmetry::General && m != n {
                return Err(parse_err(sline, "symmetric storage requires a square matrix"));
            }
            // Column-major; symmetric storage lists the lower triangle,
            // skew-symmetric the strictly lower triangle.
            let positions: Vec<(usize, usize)> = (0..n)
                .flat_map(|j| {
                    let first = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::Symmetric => j,
                        Symmetry::Skew => j + 1,
                    };
                    (first..m).map(move |i| (i, j))
                })
                .collect();
            let mut a = DenseMatrix::zeros(m, n);
            let mut values = data.flat_map(|(line, l)| l.split_whitespace().map(move |t| (line, t)));
            for &(i, j) in &positions {
                let (line, t) = values
                    .next()
                    .ok_or_else(|| parse_err(sline, format!("expected {} values", positions.len())))?;
                let v = parse_value(line, t)?;
                a[(i, j)] = v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => a[(j, i)] = v,
                    Symmetry::Skew => a[(j, i)] = -v,
                }
            }
            if let Some((line, _)) = values.next() {
                return Err(parse_err(line, "more values than the declared size"));
            }
            Ok(Matrix::Dense(a))
        }
    }
}

fn parse_header(line: usize, header: &str) -> Result<(Layout, Symmetry), MmError> {
    let tok: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tok.len() != 5 || tok[0] != "%%matrixmarket" {
        return Err(parse_err(line, "expected `%%MatrixMarket matrix <format> <field> <symmetry>`"));
    }
    if tok[1] != "matrix" {
        return Err(MmError::UnsupportedField(format!("object `{}`", tok[1])));
    }
    let layout = match tok[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(line, format!("unknown format `{other}`"))),
    };
    match tok[3].as_str() {
        "real" | "integer" | "double" => {}
        "complex" | "pattern" => {
            return Err(MmError::UnsupportedField(format!(
                "`{}` entries are not supported; only real and integer matrices are",
                tok[3]
            )))
        }
        other => return Err(parse_err(line, format!("unknown field `{other}`"))),
    }
    let symmetry = match tok[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        "hermitian" => return Err(MmError::UnsupportedField("hermitian symmetry".into())),
        other => return Err(parse_err(line, format!("unknown symmetry `{other}`"))),
    };
    Ok((layout, symmetry))
}

fn parse_index(line: usize, tok: &str, bound: usize) -> Result<usize, MmError> {
    let k: usize = tok.parse().map_err(|_| parse_err(line, format!("invalid index `{tok}`")))?;
    if k == 0 || k > bound {
        return Err(parse_err(line, format!("index {k} outside 1..={bound}")));
    }
    Ok(k - 1)
}

fn parse_value(line: usize, tok: &str) -> Result<f64, MmError> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("invalid value `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

/// Coordinate real general text with shortest round-trip values.
pub fn format_matrix_market(a: &CsrMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz());
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<(), MmError> {
    std::fs::write(path, format_matrix_market(a))?;
    Ok(())
}
