//! Matrix Market (`.mtx`) and CSV reading and writing.
//!
//! Values are written with 17 significant digits so that every `f64`
//! survives a write/read round trip unchanged.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::DenseMatrix;
use crate::error::{GinvError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtxFormat {
    /// Dense column-major listing.
    Array,
    /// One `row col value` triple per stored entry, 1-based.
    Coordinate,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> GinvError {
    GinvError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_mtx(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_mtx_from(BufReader::new(File::open(path)?))
}

pub fn read_mtx_from<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> real <symmetry>'"));
    }
    let format = match tokens[2].as_str() {
        "array" => MtxFormat::Array,
        "coordinate" => MtxFormat::Coordinate,
        other => return Err(parse_err(1, format!("unsupported format '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    // Remaining non-comment, non-blank lines as (1-based line number, text).
    let mut body = lines.filter_map(|(i, l)| match l {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))??;
    let dims = parse_usizes(&size, size_line)?;

    let m = match (format, dims.as_slice()) {
        (MtxFormat::Array, &[rows, cols]) => {
            let mut m = DMatrix::zeros(rows, cols);
            let mut count = 0usize;
            let expected = if symmetry == Symmetry::General {
                rows * cols
            } else {
                packed_len(rows, cols, symmetry, size_line)?
            };
            let mut cells = array_cells(rows, cols, symmetry);
            for item in body {
                let (line, text) = item?;
                for tok in text.split_whitespace() {
                    let v = parse_f64(tok, line)?;
                    let (i, j) = cells
                        .next()
                        .ok_or_else(|| parse_err(line, "more values than the size line declares"))?;
                    set_entry(&mut m, i, j, v, symmetry);
                    count += 1;
                }
            }
            if count != expected {
                return Err(parse_err(
                    size_line,
                    format!("expected {expected} values, found {count}"),
                ));
            }
            m
        }
        (MtxFormat::Coordinate, &[rows, cols, nnz]) => {
            let mut m = DMatrix::zeros(rows, cols);
            let mut count = 0usize;
            for item in body {
                let (line, text) = item?;
                let parts: Vec<&str> = text.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(line, "expected 'row col value'"));
                }
                let i = parse_index(parts[0], rows, line)?;
                let j = parse_index(parts[1], cols, line)?;
                let v = parse_f64(parts[2], line)?;
                set_entry(&mut m, i, j, v, symmetry);
                count += 1;
            }
            if count != nnz {
                return Err(parse_err(
                    size_line,
                    format!("expected {nnz} entries, found {count}"),
                ));
            }
            m
        }
        _ => return Err(parse_err(size_line, "malformed size line")),
    };
    DenseMatrix::from_nalgebra(m)
}

fn packed_len(rows: usize, cols: usize, symmetry: Symmetry, line: usize) -> Result<usize> {
    if rows != cols {
        return Err(parse_err(line, "symmetric storage requires a square matrix"));
    }
    Ok(match symmetry {
        Symmetry::SkewSymmetric => rows * rows.saturating_sub(1) / 2,
        _ => rows * (rows + 1) / 2,
    })
}

/// Column-major cell order; for symmetric storage only the lower triangle
/// (strictly lower for skew-symmetric) is listed.
fn array_cells(rows: usize, cols: usize, symmetry: Symmetry) -> impl Iterator<Item = (usize, usize)> {
    (0..cols).flat_map(move |j| {
        let start = match symmetry {
            Symmetry::General => 0,
            Symmetry::Symmetric => j,
            Symmetry::SkewSymmetric => j + 1,
        };
        (start..rows).map(move |i| (i, j))
    })
}

fn set_entry(m: &mut DMatrix<f64>, i: usize, j: usize, v: f64, symmetry: Symmetry) {
    m[(i, j)] = v;
    match symmetry {
        Symmetry::General => {}
        Symmetry::Symmetric => m[(j, i)] = v,
        Symmetry::SkewSymmetric => m[(j, i)] = -v,
    }
}

fn parse_usizes(text: &str, line: usize) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| parse_err(line, format!("invalid size '{t}'")))
        })
        .collect()
}

fn parse_index(tok: &str, bound: usize, line: usize) -> Result<usize> {
    let k: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid index '{tok}'")))?;
    if k == 0 || k > bound {
        return Err(parse_err(line, format!("index {k} out of range 1..={bound}")));
    }
    Ok(k - 1)
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

/// Writes `m` in Matrix Market array format.
pub fn write_mtx(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mtx_to(&mut w, m, MtxFormat::Array)?;
    w.flush()?;
    Ok(())
}

pub fn write_mtx_to<W: Write>(w: &mut W, m: &DenseMatrix, format: MtxFormat) -> Result<()> {
    let a = m.as_matrix();
    match format {
        MtxFormat::Array => {
            writeln!(w, "%%MatrixMarket matrix array real general")?;
            writeln!(w, "{} {}", a.nrows(), a.ncols())?;
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    writeln!(w, "{:.16e}", a[(i, j)])?;
                }
            }
        }
        MtxFormat::Coordinate => {
            let nnz = a.iter().filter(|&&x| x != 0.0).count();
            writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(w, "{} {} {}", a.nrows(), a.ncols(), nnz)?;
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    let v = a[(i, j)];
                    if v != 0.0 {
                        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reads a headerless CSV file of numbers, one matrix row per record.
pub fn read_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        let row = rec
            .iter()
            .map(|t| parse_f64(t, line))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn write_csv(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    let a = m.as_matrix();
    for i in 0..a.nrows() {
        w.write_record((0..a.ncols()).map(|j| format!("{:.16e}", a[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads `.csv` files as CSV and anything else as Matrix Market.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv(path)
    } else {
        read_mtx(path)
    }
}

/// Writes `.csv` files as CSV and anything else as Matrix Market array.
pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        write_csv(path, m)
    } else {
        write_mtx(path, m)
    }
}
