//! Plain-text matrix and support files.
//!
//! Matrix: header `m n`, then `m` lines of `n` values.
//! Support: header `rows cols nnz`, then `nnz` lines `i j` (1-based).
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, SupportMask};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_fields<T: FromStr>(line: usize, text: &str, expected: usize, what: &str) -> Result<Vec<T>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != expected {
        return Err(FsmfError::Parse {
            line,
            message: format!("expected {expected} {what}, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| FsmfError::Parse {
                line,
                message: format!("cannot parse '{f}' as {what}"),
            })
        })
        .collect()
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or(FsmfError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let dims: Vec<usize> = parse_fields(hl, header, 2, "dimensions")?;
    let (m, n) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(m * n);
    let mut last = hl;
    for _ in 0..m {
        let (ln, l) = lines.next().ok_or(FsmfError::Parse {
            line: last + 1,
            message: format!("expected {m} rows"),
        })?;
        let row: Vec<f64> = parse_fields(ln, l, n, "values")?;
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(FsmfError::Parse {
                line: ln,
                message: format!("non-finite value in column {}", c + 1),
            });
        }
        data.extend(row);
        last = ln;
    }
    if let Some((ln, _)) = lines.next() {
        return Err(FsmfError::Parse {
            line: ln,
            message: "trailing content after the last row".into(),
        });
    }
    DenseMatrix::new(m, n, data)
}

/// 17 significant digits, so parsing the output returns the same bits.
pub fn format_matrix(a: &DenseMatrix) -> String {
    let mut s = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn parse_support(text: &str) -> Result<SupportMask> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or(FsmfError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let h: Vec<usize> = parse_fields(hl, header, 3, "header fields")?;
    let (rows, cols, nnz) = (h[0], h[1], h[2]);
    let mut pairs = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashSet::with_capacity(nnz);
    let mut last = hl;
    for _ in 0..nnz {
        let (ln, l) = lines.next().ok_or(FsmfError::Parse {
            line: last + 1,
            message: format!("expected {nnz} entries"),
        })?;
        let ij: Vec<usize> = parse_fields(ln, l, 2, "indices")?;
        let (i, j) = (ij[0], ij[1]);
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(FsmfError::Parse {
                line: ln,
                message: format!("index ({i}, {j}) outside 1..={rows} x 1..={cols}"),
            });
        }
        if !seen.insert((i, j)) {
            return Err(FsmfError::Parse {
                line: ln,
                message: format!("duplicate entry ({i}, {j})"),
            });
        }
        pairs.push((i - 1, j - 1));
        last = ln;
    }
    if let Some((ln, _)) = lines.next() {
        return Err(FsmfError::Parse {
            line: ln,
            message: "more entries than declared".into(),
        });
    }
    SupportMask::from_pairs(rows, cols, pairs)
}

pub fn format_support(s: &SupportMask) -> String {
    let mut out = format!("{} {} {}\n", s.rows(), s.cols(), s.nnz());
    for &(i, j) in s.entries() {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    Ok(std::fs::write(path, format_matrix(a))?)
}

pub fn read_support(path: impl AsRef<Path>) -> Result<SupportMask> {
    parse_support(&std::fs::read_to_string(path)?)
}

pub fn write_support(path: impl AsRef<Path>, s: &SupportMask) -> Result<()> {
    Ok(std::fs::write(path, format_support(s))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_rejects_duplicates() {
        let e = parse_support("2 2 2\n1 1\n1 1\n").unwrap_err();
        assert!(matches!(e, FsmfError::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn support_rejects_zero_index() {
        assert!(parse_support("2 2 1\n0 1\n").is_err());
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let a = DenseMatrix::from_rows(&[[0.1, -1.0 / 3.0], [1e-300, 6.02e23]]).unwrap();
        assert_eq!(parse_matrix(&format_matrix(&a)).unwrap(), a);
    }

    #[test]
    fn matrix_shape_errors() {
        assert!(parse_matrix("2 2\n1 2\n").is_err());
        assert!(parse_matrix("1 2\n1 2 3\n").is_err());
        assert!(parse_matrix("1 1\nnan\n").is_err());
    }
}
