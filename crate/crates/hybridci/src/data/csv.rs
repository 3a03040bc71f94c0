//! Minimal CSV reader and writer for numeric tables.
//!
//! The on-disk dialect is deliberately small: comma separated, optional
//! header row, one record per line, every field a decimal float. Parse
//! errors carry 1-based row and column positions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::Matrix;

use super::Dataset;

/// Parse CSV text into a row-major table. `has_header` skips the first
/// line without trying to parse it.
pub fn parse_csv(text: &str, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line_idx, line) in text.lines().enumerate() {
        if line_idx == 0 && has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row_no = line_idx + 1;
        let mut row = Vec::new();
        for (col_idx, field) in line.split(',').enumerate() {
            let trimmed = field.trim();
            let value: f64 = trimmed.parse().map_err(|_| Error::Parse {
                row: row_no,
                col: col_idx + 1,
                message: format!("not a number: {:?}", trimmed),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    col: col_idx + 1,
                    message: "non-finite value".into(),
                });
            }
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    row: row_no,
                    col: row.len(),
                    message: format!("expected {} fields, found {}", w, row.len()),
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("csv: no data rows".into()));
    }
    Ok(rows)
}

/// Load a dataset from CSV, taking the last `target_cols` columns as
/// targets and the rest as inputs.
pub fn load_csv(path: &Path, target_cols: usize, has_header: bool) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let rows = parse_csv(&text, has_header)?;
    let width = rows[0].len();
    if target_cols == 0 || target_cols >= width {
        return Err(Error::InvalidInput(format!(
            "csv has {} columns, cannot take {} as targets",
            width, target_cols
        )));
    }
    let split_at = width - target_cols;
    let inputs: Vec<Vec<f64>> = rows.iter().map(|r| r[..split_at].to_vec()).collect();
    let targets: Vec<Vec<f64>> = rows.iter().map(|r| r[split_at..].to_vec()).collect();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::new(Matrix::from_rows(&inputs)?, Matrix::from_rows(&targets)?, name)
}

/// Render a table as CSV text. Floats are written with Rust's shortest
/// round-trip formatting, so reading the output back reproduces the exact
/// values.
pub fn format_csv(header: Option<&[&str]>, rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{}", v);
        }
        out.push('\n');
    }
    out
}

/// Write a table to disk as CSV.
pub fn write_csv(path: &Path, header: Option<&[&str]>, rows: &[Vec<f64>]) -> Result<()> {
    fs::write(path, format_csv(header, rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_table() {
        let rows = parse_csv("1,2,3\n4,5,6\n", false).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
    }

    #[test]
    fn skips_header_and_blank_lines() {
        let rows = parse_csv("t,x\n\n0,1.5\n1,1.75\n\n", true).unwrap();
        assert_eq!(rows, vec![vec![0.0, 1.5], vec![1.0, 1.75]]);
    }

    #[test]
    fn error_carries_position() {
        let err = parse_csv("1,2\n3,oops\n", false).unwrap_err();
        match err {
            Error::Parse { row, col, .. } => {
                assert_eq!(row, 2);
                assert_eq!(col, 2);
            }
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = parse_csv("1,2\n3\n", false).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(parse_csv("1,inf\n", false).is_err());
        assert!(parse_csv("NaN\n", false).is_err());
    }

    #[test]
    fn roundtrip_exact() {
        let rows = vec![
            vec![0.1, 1.0 / 3.0, -2.5e-17],
            vec![f64::MIN_POSITIVE, 12345.6789, 1e300],
        ];
        let text = format_csv(Some(&["a", "b", "c"]), &rows);
        let back = parse_csv(&text, true).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn load_splits_targets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        write_csv(&path, None, &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let ds = load_csv(&path, 1, false).unwrap();
        assert_eq!(ds.input_width(), 2);
        assert_eq!(ds.target_width(), 1);
        assert_eq!(ds.targets.as_slice(), &[3.0, 6.0]);
        assert_eq!(ds.name, "toy");
        assert!(load_csv(&path, 3, false).is_err());
    }
}
