//! Dense CSV reading/writing: header row, comma delimiter, labels as the
//! trailing columns.

use crate::dataset::{DataError, MultiLabelDataset};

/// Parse a dense CSV whose last `label_count` columns are binary labels.
pub fn parse_dense_csv(text: &str, label_count: usize) -> Result<MultiLabelDataset, DataError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| DataError::Schema("document is empty".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let total = names.len();
    if label_count == 0 {
        return Err(DataError::Schema("label count must be at least 1".into()));
    }
    if label_count >= total {
        return Err(DataError::Schema(format!(
            "label count {label_count} leaves no feature columns (header has {total})"
        )));
    }
    let d = total - label_count;
    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Vec<u8>> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = raw.split(',').collect();
        if cells.len() != total {
            return Err(DataError::Parse {
                line: line_no,
                message: format!("row has {} cells, header has {total}", cells.len()),
            });
        }
        let mut x = Vec::with_capacity(d);
        let mut y = Vec::with_capacity(label_count);
        for (col, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| DataError::Parse {
                line: line_no,
                message: format!(
                    "cell '{}' in column '{}' (index {col}) is not numeric",
                    cell.trim(),
                    names[col]
                ),
            })?;
            if !value.is_finite() {
                return Err(DataError::Parse {
                    line: line_no,
                    message: format!("non-finite value in column '{}'", names[col]),
                });
            }
            if col < d {
                x.push(value);
            } else {
                if value != 0.0 && value != 1.0 {
                    return Err(DataError::Validation {
                        line: line_no,
                        message: format!(
                            "label column '{}' expects 0/1 but row has {value}",
                            names[col]
                        ),
                    });
                }
                y.push(value as u8);
            }
        }
        features.push(x);
        labels.push(y);
    }
    MultiLabelDataset::new(
        features,
        labels,
        names[..d].to_vec(),
        names[d..].to_vec(),
    )
}

/// Serialize as dense CSV with a header row. Feature values use the shortest
/// representation that round-trips in f64; labels are 0/1.
pub fn write_csv(dataset: &MultiLabelDataset) -> String {
    let mut out = String::new();
    let header: Vec<&str> = dataset
        .feature_names()
        .iter()
        .chain(dataset.label_names())
        .map(String::as_str)
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..dataset.num_instances() {
        let mut cells: Vec<String> = dataset.feature_row(i).iter().map(|v| format!("{v}")).collect();
        cells.extend(dataset.label_row(i).iter().map(|y| y.to_string()));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Serialization formats for [`write_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Arff,
    Csv,
}

impl std::fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetFormat::Arff => write!(f, "arff"),
            DatasetFormat::Csv => write!(f, "csv"),
        }
    }
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "arff" => Ok(DatasetFormat::Arff),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(format!("unknown format '{other}' (expected arff or csv)")),
        }
    }
}

pub fn write_dataset(dataset: &MultiLabelDataset, format: DatasetFormat) -> String {
    match format {
        DatasetFormat::Arff => crate::arff::write_arff(dataset),
        DatasetFormat::Csv => write_csv(dataset),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "f1,f2,L1\n1,2,0\n3,4,1\n";

    #[test]
    fn parses_dense_csv() {
        let ds = parse_dense_csv(SAMPLE, 1).unwrap();
        assert_eq!(ds.num_features(), 2);
        assert_eq!(ds.num_labels(), 1);
        assert_eq!(ds.feature_row(0), &[1.0, 2.0]);
        assert_eq!(ds.feature_row(1), &[3.0, 4.0]);
        assert_eq!(ds.label_row(0), &[0]);
        assert_eq!(ds.label_row(1), &[1]);
    }

    #[test]
    fn label_count_consuming_all_columns_fails() {
        match parse_dense_csv(SAMPLE, 3) {
            Err(DataError::Schema(_)) => {}
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let text = "f1,f2,L1\n1,abc,0\n";
        match parse_dense_csv(text, 1) {
            Err(DataError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("abc") && message.contains("f2"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_row_fails() {
        let text = "f1,f2,L1\n1,2\n";
        assert!(matches!(
            parse_dense_csv(text, 1),
            Err(DataError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn non_binary_label_fails() {
        let text = "f1,L1\n1,0.5\n";
        assert!(matches!(
            parse_dense_csv(text, 1),
            Err(DataError::Validation { line: 2, .. })
        ));
    }

    #[test]
    fn roundtrip_preserves_dataset() {
        let ds = parse_dense_csv(SAMPLE, 1).unwrap();
        let back = parse_dense_csv(&write_csv(&ds), 1).unwrap();
        assert_eq!(ds, back);
    }
}
