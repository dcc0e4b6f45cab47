//! Dataset ingestion: CSV and libsvm-style text formats.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::dataset::{Dataset, DatasetKind};

/// Text layout for [`load_dataset`].
#[derive(Debug, Clone, Copy)]
pub enum DataFormat {
    /// One sample per line, target first then the features:
    /// `target,f1,...,fd`.
    Csv,
    /// `label idx:val ...` with 1-based indices; omitted indices are zero.
    /// The dimension is inferred from the largest index unless given.
    LibSvm { dim: Option<usize> },
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    read_dataset(reader, format)
}

pub fn read_dataset<R: BufRead>(reader: R, format: DataFormat) -> Result<Dataset> {
    match format {
        DataFormat::Csv => read_csv(reader),
        DataFormat::LibSvm { dim } => read_libsvm(reader, dim),
    }
}

fn read_csv<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut targets = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut values = line.split(',').map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: lineno, detail: format!("bad number {tok:?}: {e}") })
        });
        let target = values
            .next()
            .ok_or_else(|| Error::Parse { line: lineno, detail: "empty row".into() })??;
        let feats: Vec<f64> = values.collect::<Result<_>>()?;
        if feats.is_empty() {
            return Err(Error::Parse { line: lineno, detail: "row has no features".into() });
        }
        if let Some(first) = rows.first() {
            if feats.len() != first.len() {
                return Err(Error::Parse {
                    line: lineno,
                    detail: format!("expected {} features, found {}", first.len(), feats.len()),
                });
            }
        }
        targets.push(target);
        rows.push(feats);
    }
    finish(rows, targets)
}

fn read_libsvm<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut targets = Vec::new();
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let label = parts
            .next()
            .unwrap()
            .parse::<f64>()
            .map_err(|e| Error::Parse { line: lineno, detail: format!("bad label: {e}") })?;
        let mut entries = Vec::new();
        for tok in parts {
            let (i, v) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                detail: format!("expected idx:val, found {tok:?}"),
            })?;
            let i: usize = i
                .parse()
                .map_err(|e| Error::Parse { line: lineno, detail: format!("bad index {i:?}: {e}") })?;
            if i == 0 {
                return Err(Error::Parse { line: lineno, detail: "indices are 1-based".into() });
            }
            let v: f64 = v
                .parse()
                .map_err(|e| Error::Parse { line: lineno, detail: format!("bad value {v:?}: {e}") })?;
            max_index = max_index.max(i);
            entries.push((i - 1, v));
        }
        targets.push(label);
        sparse_rows.push(entries);
    }
    let d = match dim {
        Some(d) if d >= max_index => d,
        Some(d) => {
            return Err(Error::Validation(format!(
                "declared dimension {d} smaller than largest index {max_index}"
            )))
        }
        None => max_index,
    };
    let rows: Vec<Vec<f64>> = sparse_rows
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; d];
            for (i, v) in entries {
                row[i] = v;
            }
            row
        })
        .collect();
    finish(rows, targets)
}

fn finish(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Dataset> {
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, detail: "empty dataset".into() });
    }
    let d = rows[0].len();
    let features = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let targets = DVector::from_vec(targets);
    let kind = if targets.iter().all(|&t| t == 0.0 || t == 1.0) {
        DatasetKind::Binary
    } else {
        DatasetKind::Regression
    };
    Dataset::new(features, targets, kind)
}

/// Writes the CSV layout read by [`DataFormat::Csv`]; the default float
/// formatting round-trips every value exactly.
pub fn write_csv<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    for i in 0..dataset.len() {
        let mut fields = vec![format!("{}", dataset.targets[i])];
        fields.extend((0..dataset.dim()).map(|j| format!("{}", dataset.features[(i, j)])));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_line_layout() {
        let ds = read_dataset("1.5,0.1,0.2\n".as_bytes(), DataFormat::Csv).unwrap();
        assert_eq!(ds.targets[0], 1.5);
        assert_eq!(ds.features[(0, 0)], 0.1);
        assert_eq!(ds.features[(0, 1)], 0.2);
        assert_eq!(ds.kind, DatasetKind::Regression);
    }

    #[test]
    fn libsvm_sparse_convention() {
        let ds = read_dataset("1 2:0.5\n".as_bytes(), DataFormat::LibSvm { dim: Some(3) }).unwrap();
        assert_eq!(ds.targets[0], 1.0);
        assert_eq!(ds.features.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.5, 0.0]);
        assert_eq!(ds.kind, DatasetKind::Binary);
    }

    #[test]
    fn round_trip_reproduces_values_exactly() {
        let text = "0.30000000000000004,-1.25,3.5e-7\n2.0,0.1,0.2\n";
        let ds = read_dataset(text.as_bytes(), DataFormat::Csv).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), DataFormat::Csv).unwrap();
        assert_eq!(ds.features, back.features);
        assert_eq!(ds.targets, back.targets);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read_dataset("1.0,2.0\nx,3.0\n".as_bytes(), DataFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));

        let err =
            read_dataset("1 2:0.5\n1 nope\n".as_bytes(), DataFormat::LibSvm { dim: None }).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn inconsistent_width_is_rejected() {
        let err = read_dataset("1.0,2.0\n1.0,2.0,3.0\n".as_bytes(), DataFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
