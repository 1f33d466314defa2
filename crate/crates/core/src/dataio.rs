//! CSV dataset adapter.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Task};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvAdapterSpec {
    pub path: PathBuf,
    /// Column name, or a 0-based column index when the file has no header.
    pub target_column: String,
    pub task: Task,
    #[serde(default = "yes")]
    pub has_header: bool,
}

fn yes() -> bool {
    true
}

/// Loads every non-target column as a feature, in file order.
///
/// Rows keep their file order. Classification labels are encoded to
/// `0..C` by order of first appearance. Empty cells are rejected.
pub fn load_csv(spec: &CsvAdapterSpec) -> Result<Dataset> {
    if !spec.path.exists() {
        return Err(Error::FileNotFound(spec.path.clone()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(spec.has_header)
        .trim(csv::Trim::All)
        .from_path(&spec.path)
        .map_err(|e| csv_error(e, 0))?;

    let first_row = usize::from(spec.has_header) + 1;
    let target = if spec.has_header {
        let headers = reader.headers().map_err(|e| csv_error(e, 1))?;
        headers
            .iter()
            .position(|h| h == spec.target_column)
            .ok_or_else(|| Error::MissingTargetColumn(spec.target_column.clone()))?
    } else {
        spec.target_column
            .parse::<usize>()
            .map_err(|_| Error::MissingTargetColumn(spec.target_column.clone()))?
    };

    let mut features: Vec<f64> = Vec::new();
    let mut raw_targets: Vec<String> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let row = first_row + i;
        let record = record.map_err(|e| csv_error(e, row))?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::ParseError {
                row,
                col: record.len(),
                message: format!("expected {w} fields, found {}", record.len()),
            });
        }
        if target >= w {
            return Err(Error::MissingTargetColumn(spec.target_column.clone()));
        }
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::ParseError {
                    row,
                    col: c + 1,
                    message: "missing value".into(),
                });
            }
            if c == target {
                raw_targets.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericFeature {
                row,
                col: c + 1,
                value: cell.to_string(),
            })?;
            features.push(v);
        }
    }
    let n = raw_targets.len();
    if n == 0 {
        return Err(Error::ParseError {
            row: first_row,
            col: 0,
            message: "file has no data rows".into(),
        });
    }
    let p = width.unwrap_or(1) - 1;

    let y = match spec.task {
        Task::Classification => {
            let mut codes: HashMap<&str, usize> = HashMap::new();
            raw_targets
                .iter()
                .map(|label| {
                    let next = codes.len();
                    *codes.entry(label.as_str()).or_insert(next) as f64
                })
                .collect()
        }
        Task::Regression => raw_targets
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.parse::<f64>().map_err(|_| Error::ParseError {
                    row: first_row + i,
                    col: target + 1,
                    message: format!("regression target {v:?} is not numeric"),
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let name = spec
        .path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::new(name, spec.task, Matrix::from_vec(n, p, features)?, y, None)
}

fn csv_error(e: csv::Error, row: usize) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        },
        _ => Error::ParseError {
            row: e.position().map(|p| p.line() as usize).unwrap_or(row),
            col: 0,
            message: e.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn spec(path: &std::path::Path, target: &str) -> CsvAdapterSpec {
        CsvAdapterSpec {
            path: path.to_path_buf(),
            target_column: target.into(),
            task: Task::Classification,
            has_header: true,
        }
    }

    #[test]
    fn label_encoding_by_first_appearance() {
        let f = write("a,b,class\n1,2,x\n3,4,x\n5,6,y\n");
        let ds = load_csv(&spec(f.path(), "class")).unwrap();
        assert_eq!((ds.n_samples(), ds.n_features()), (3, 2));
        assert_eq!(ds.y, vec![0.0, 0.0, 1.0]);
        assert_eq!(ds.x.row(2), &[5.0, 6.0]);
        assert!(ds.ground_truth.is_none());
    }

    #[test]
    fn target_in_the_middle_keeps_feature_order() {
        let f = write("a,class,b\n1,q,2\n3,p,4\n");
        let ds = load_csv(&spec(f.path(), "class")).unwrap();
        assert_eq!(ds.x.row(0), &[1.0, 2.0]);
        assert_eq!(ds.y, vec![0.0, 1.0]);
    }

    #[test]
    fn missing_target_column() {
        let f = write("a,b\n1,2\n3,4\n");
        assert!(matches!(
            load_csv(&spec(f.path(), "class")),
            Err(Error::MissingTargetColumn(_))
        ));
    }

    #[test]
    fn non_numeric_feature() {
        let f = write("a,b,class\n1,2,x\n3,oops,y\n");
        match load_csv(&spec(f.path(), "class")) {
            Err(Error::NonNumericFeature { row, col, value }) => {
                assert_eq!((row, col, value.as_str()), (3, 2, "oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_cell_rejected() {
        let f = write("a,b,class\n1,,x\n3,4,y\n");
        assert!(matches!(
            load_csv(&spec(f.path(), "class")),
            Err(Error::ParseError { row: 2, col: 2, .. })
        ));
    }

    #[test]
    fn file_not_found() {
        let s = spec(std::path::Path::new("/nonexistent/data.csv"), "y");
        assert!(matches!(load_csv(&s), Err(Error::FileNotFound(_))));
    }

    #[test]
    fn headerless_regression() {
        let f = write("1,2,0.5\n3,4,1.5\n");
        let s = CsvAdapterSpec {
            path: f.path().to_path_buf(),
            target_column: "2".into(),
            task: Task::Regression,
            has_header: false,
        };
        let ds = load_csv(&s).unwrap();
        assert_eq!(ds.y, vec![0.5, 1.5]);
        assert_eq!(load_csv(&s).unwrap(), ds);
    }

    #[test]
    fn iris_fixture() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
        let ds = load_csv(&spec(&path, "species")).unwrap();
        assert_eq!((ds.n_samples(), ds.n_features()), (150, 4));
        assert_eq!(ds.n_classes(), 3);
    }
}
