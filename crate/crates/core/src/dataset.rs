//! Multi-label dataset container, train/validation/test splitting, and
//! min-max feature scaling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid split fractions: {0}")]
    InvalidFraction(String),
}

/// Feature matrix X (n×d) paired with a binary label matrix Y (n×q).
/// Immutable after construction; every constructor enforces the invariants
/// (no NaN/inf in X, Y strictly 0/1, unique names matching the dimensions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelDataset {
    n: usize,
    d: usize,
    q: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    label_names: Vec<String>,
}

fn check_unique(names: &[String], kind: &str) -> Result<(), DataError> {
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(DataError::InvalidDataset(format!(
                "duplicate {kind} name: {name}"
            )));
        }
    }
    Ok(())
}

impl MultiLabelDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<Vec<u8>>,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let n = features.len();
        if n == 0 {
            return Err(DataError::InvalidDataset("dataset has no instances".into()));
        }
        if labels.len() != n {
            return Err(DataError::InvalidDataset(format!(
                "feature rows ({n}) and label rows ({}) differ",
                labels.len()
            )));
        }
        let d = feature_names.len();
        let q = label_names.len();
        if d == 0 || q == 0 {
            return Err(DataError::InvalidDataset(
                "need at least one feature and one label".into(),
            ));
        }
        check_unique(&feature_names, "feature")?;
        check_unique(&label_names, "label")?;
        let mut flat_x = Vec::with_capacity(n * d);
        for (i, row) in features.iter().enumerate() {
            if row.len() != d {
                return Err(DataError::InvalidDataset(format!(
                    "feature row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(DataError::InvalidDataset(format!(
                        "non-finite feature value in row {i}"
                    )));
                }
            }
            flat_x.extend_from_slice(row);
        }
        let mut flat_y = Vec::with_capacity(n * q);
        for (i, row) in labels.iter().enumerate() {
            if row.len() != q {
                return Err(DataError::InvalidDataset(format!(
                    "label row {i} has {} entries, expected {q}",
                    row.len()
                )));
            }
            for &v in row {
                if v > 1 {
                    return Err(DataError::InvalidDataset(format!(
                        "label value {v} in row {i} is not 0/1"
                    )));
                }
            }
            flat_y.extend_from_slice(row);
        }
        Ok(MultiLabelDataset {
            n,
            d,
            q,
            features: flat_x,
            labels: flat_y,
            feature_names,
            label_names,
        })
    }

    pub fn num_instances(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.d
    }

    pub fn num_labels(&self) -> usize {
        self.q
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label_row(&self, i: usize) -> &[u8] {
        &self.labels[i * self.q..(i + 1) * self.q]
    }

    pub fn label_column(&self, j: usize) -> Vec<u8> {
        (0..self.n).map(|i| self.labels[i * self.q + j]).collect()
    }

    /// Count of positive instances per label.
    pub fn label_positives(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.q];
        for i in 0..self.n {
            for (j, &y) in self.label_row(i).iter().enumerate() {
                counts[j] += y as usize;
            }
        }
        counts
    }

    /// New dataset keeping the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, DataError> {
        if indices.is_empty() {
            return Err(DataError::InvalidDataset(
                "row selection produces an empty dataset".into(),
            ));
        }
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len() * self.q);
        for &i in indices {
            assert!(i < self.n, "row index {i} out of bounds");
            features.extend_from_slice(self.feature_row(i));
            labels.extend_from_slice(self.label_row(i));
        }
        Ok(MultiLabelDataset {
            n: indices.len(),
            d: self.d,
            q: self.q,
            features,
            labels,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        })
    }

    /// Append rows (same schema) and return the extended dataset.
    pub fn with_appended(
        &self,
        rows: impl IntoIterator<Item = (Vec<f64>, Vec<u8>)>,
    ) -> Result<Self, DataError> {
        let mut features = self.features.clone();
        let mut labels = self.labels.clone();
        let mut n = self.n;
        for (x, y) in rows {
            if x.len() != self.d {
                return Err(DataError::Schema(format!(
                    "appended row has {} features, dataset has {}",
                    x.len(),
                    self.d
                )));
            }
            if y.len() != self.q {
                return Err(DataError::Schema(format!(
                    "appended row has {} labels, dataset has {}",
                    y.len(),
                    self.q
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(DataError::InvalidDataset(
                    "appended row has non-finite feature".into(),
                ));
            }
            if y.iter().any(|&v| v > 1) {
                return Err(DataError::InvalidDataset(
                    "appended row has non-binary label".into(),
                ));
            }
            features.extend_from_slice(&x);
            labels.extend_from_slice(&y);
            n += 1;
        }
        Ok(MultiLabelDataset {
            n,
            d: self.d,
            q: self.q,
            features,
            labels,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        })
    }

    pub fn same_schema(&self, other: &MultiLabelDataset) -> bool {
        self.feature_names == other.feature_names && self.label_names == other.label_names
    }
}

/// Train/validation/test partition of one dataset.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: MultiLabelDataset,
    pub validation: MultiLabelDataset,
    pub test: Option<MultiLabelDataset>,
}

/// Seeded uniform split. Held-out counts are round(n·fraction) with ties
/// resolved toward the held-out split.
pub fn split(
    dataset: &MultiLabelDataset,
    validation_fraction: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, DataError> {
    if !(0.0..1.0).contains(&validation_fraction) || !(0.0..1.0).contains(&test_fraction) {
        return Err(DataError::InvalidFraction(format!(
            "fractions must lie in [0,1): validation={validation_fraction}, test={test_fraction}"
        )));
    }
    let total = validation_fraction + test_fraction;
    if total >= 1.0 {
        return Err(DataError::InvalidFraction(format!(
            "validation + test = {total} must be < 1"
        )));
    }
    let n = dataset.num_instances();
    // f64::round is round-half-away-from-zero, i.e. half goes to the
    // held-out split for these non-negative counts.
    let n_val = (n as f64 * validation_fraction).round() as usize;
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_val == 0 {
        return Err(DataError::InvalidFraction(format!(
            "validation fraction {validation_fraction} yields zero rows for n={n}"
        )));
    }
    if n_val + n_test >= n {
        return Err(DataError::InvalidFraction(format!(
            "held-out rows ({n_val}+{n_test}) leave no training rows for n={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let validation = dataset.select_rows(&order[..n_val])?;
    let test = if n_test > 0 {
        Some(dataset.select_rows(&order[n_val..n_val + n_test])?)
    } else {
        None
    };
    let train = dataset.select_rows(&order[n_val + n_test..])?;
    Ok(DatasetSplit {
        train,
        validation,
        test,
    })
}

/// Per-feature min/max fitted on one dataset, used to map features into
/// [0,1] and back. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub per_feature_min: Vec<f64>,
    pub per_feature_max: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(dataset: &MultiLabelDataset) -> Self {
        let d = dataset.num_features();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for i in 0..dataset.num_instances() {
            for (j, &v) in dataset.feature_row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        FeatureScaler {
            per_feature_min: min,
            per_feature_max: max,
        }
    }

    pub fn num_features(&self) -> usize {
        self.per_feature_min.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        assert_eq!(row.len(), self.num_features(), "scaler dimension mismatch");
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.per_feature_max[j] - self.per_feature_min[j];
                if range == 0.0 {
                    0.0
                } else {
                    (v - self.per_feature_min[j]) / range
                }
            })
            .collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        assert_eq!(row.len(), self.num_features(), "scaler dimension mismatch");
        row.iter()
            .enumerate()
            .map(|(j, &v)| v * (self.per_feature_max[j] - self.per_feature_min[j]) + self.per_feature_min[j])
            .collect()
    }

    pub fn transform(&self, dataset: &MultiLabelDataset) -> Result<MultiLabelDataset, DataError> {
        if dataset.num_features() != self.num_features() {
            return Err(DataError::Schema(format!(
                "scaler fitted for {} features, dataset has {}",
                self.num_features(),
                dataset.num_features()
            )));
        }
        let features = (0..dataset.num_instances())
            .map(|i| self.transform_row(dataset.feature_row(i)))
            .collect();
        let labels = (0..dataset.num_instances())
            .map(|i| dataset.label_row(i).to_vec())
            .collect();
        MultiLabelDataset::new(
            features,
            labels,
            dataset.feature_names().to_vec(),
            dataset.label_names().to_vec(),
        )
    }
}

/// Min-max scale every feature column of `dataset` to [0,1] and return the
/// scaler for later inverse transforms.
pub fn normalize_features(dataset: &MultiLabelDataset) -> (MultiLabelDataset, FeatureScaler) {
    let scaler = FeatureScaler::fit(dataset);
    let scaled = scaler
        .transform(dataset)
        .expect("scaler fitted on the same dataset");
    (scaled, scaler)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(n: usize) -> MultiLabelDataset {
        let features = (0..n).map(|i| vec![i as f64, (2 * i) as f64]).collect();
        let labels = (0..n).map(|i| vec![(i % 2) as u8]).collect();
        MultiLabelDataset::new(
            features,
            labels,
            vec!["f1".into(), "f2".into()],
            vec!["L1".into()],
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_datasets() {
        assert!(MultiLabelDataset::new(
            vec![vec![1.0]],
            vec![vec![2]],
            vec!["f".into()],
            vec!["l".into()]
        )
        .is_err());
        assert!(MultiLabelDataset::new(
            vec![vec![f64::NAN]],
            vec![vec![0]],
            vec!["f".into()],
            vec!["l".into()]
        )
        .is_err());
        assert!(MultiLabelDataset::new(
            vec![vec![1.0, 2.0]],
            vec![vec![0]],
            vec!["f".into(), "f".into()],
            vec!["l".into()]
        )
        .is_err());
    }

    #[test]
    fn split_counts_and_disjointness() {
        let ds = tiny(10);
        let split = split(&ds, 0.2, 0.0, 7).unwrap();
        assert_eq!(split.train.num_instances(), 8);
        assert_eq!(split.validation.num_instances(), 2);
        assert!(split.test.is_none());
        // disjoint: every original row appears exactly once across splits
        let mut seen: Vec<Vec<f64>> = Vec::new();
        for part in [&split.train, &split.validation] {
            for i in 0..part.num_instances() {
                seen.push(part.feature_row(i).to_vec());
            }
        }
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expect: Vec<Vec<f64>> = (0..10).map(|i| ds.feature_row(i).to_vec()).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, expect);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = tiny(20);
        let a = split(&ds, 0.25, 0.25, 7).unwrap();
        let b = split(&ds, 0.25, 0.25, 7).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.validation, b.validation);
        assert_eq!(a.test, b.test);
        let c = split(&ds, 0.25, 0.25, 8).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = tiny(10);
        assert!(split(&ds, 0.6, 0.5, 1).is_err());
        assert!(split(&ds, -0.1, 0.0, 1).is_err());
        // rounds to zero validation rows
        assert!(split(&ds, 0.01, 0.0, 1).is_err());
    }

    #[test]
    fn normalize_scales_and_inverts() {
        let ds = MultiLabelDataset::new(
            vec![vec![2.0, 5.0], vec![4.0, 5.0], vec![6.0, 5.0]],
            vec![vec![1], vec![0], vec![1]],
            vec!["a".into(), "b".into()],
            vec!["l".into()],
        )
        .unwrap();
        let (scaled, scaler) = normalize_features(&ds);
        let col: Vec<f64> = (0..3).map(|i| scaled.feature_row(i)[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
        // constant column maps to 0
        assert!((0..3).all(|i| scaled.feature_row(i)[1] == 0.0));
        for i in 0..3 {
            let back = scaler.inverse_row(scaled.feature_row(i));
            for (a, b) in back.iter().zip(ds.feature_row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
