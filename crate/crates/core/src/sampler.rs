//! Synthetic-instance generation with a trained encoder/decoder model, plus
//! the MLROS / MLRUS / MLSMOTE resampling baselines. All samplers are
//! deterministic per (input, config, seed).

use crate::aemlo::{binarize, AemloModel};
use crate::dataset::{DataError, MultiLabelDataset};
use crate::imbalance::{compute_profile, minority_instances, minority_labels, ImbalanceError};
use crate::nn::{sigmoid, Matrix};
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("nothing to sample: {0}")]
    NothingToSample(String),
    #[error(
        "generation starved: {accepted}/{needed} accepted after {attempts} attempts \
         (acceptance rate {rate:.4})"
    )]
    Starvation {
        attempts: usize,
        accepted: usize,
        needed: usize,
        rate: f64,
    },
    #[error("invalid sampling configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Imbalance(#[from] ImbalanceError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Sampling-rate configuration. `max_attempts` defaults to 100·num.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Sampling rate in (0,1]; the target count is round(p·n).
    pub p: f64,
    pub imr_threshold: f64,
    pub max_attempts: Option<usize>,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(p: f64, seed: u64) -> Self {
        SamplingConfig {
            p,
            imr_threshold: 10.0,
            max_attempts: None,
            seed,
        }
    }
}

/// A generated (features, labels) pair with the minority seed it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticInstance {
    /// Original feature scale (de-normalized).
    pub features: Vec<f64>,
    pub labels: Vec<u8>,
    /// Index of the seed instance in the training set.
    pub seed_index: usize,
}

/// Result of a generation run, including the rejection audit.
#[derive(Debug, Clone)]
pub struct GenerationReport {
    pub instances: Vec<SyntheticInstance>,
    pub rejected_all_zero: usize,
    pub attempts: usize,
    pub minority_labels: Vec<usize>,
}

fn target_count(p: f64, n: usize) -> Result<usize, SampleError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(SampleError::InvalidConfig(format!(
            "sampling rate p={p} must lie in (0,1]"
        )));
    }
    Ok((p * n as f64).round() as usize)
}

/// Generate round(p·n) synthetic minority instances: encode a uniformly
/// drawn minority seed, decode features and thresholded labels, reject
/// all-zero label vectors (each rejection consumes an attempt).
pub fn generate(
    model: &AemloModel,
    train_set: &MultiLabelDataset,
    cfg: &SamplingConfig,
) -> Result<GenerationReport, SampleError> {
    if model.feature_dim() != train_set.num_features()
        || model.label_dim() != train_set.num_labels()
    {
        return Err(SampleError::InvalidConfig(format!(
            "model trained for d={}, q={} but dataset has d={}, q={}",
            model.feature_dim(),
            model.label_dim(),
            train_set.num_features(),
            train_set.num_labels()
        )));
    }
    let num = target_count(cfg.p, train_set.num_instances())?;
    if num == 0 {
        return Ok(GenerationReport {
            instances: Vec::new(),
            rejected_all_zero: 0,
            attempts: 0,
            minority_labels: Vec::new(),
        });
    }
    let profile = compute_profile(train_set)?;
    let ls = minority_labels(&profile, cfg.imr_threshold);
    if ls.is_empty() {
        return Err(SampleError::NothingToSample(format!(
            "no label exceeds ImR > {} and IRlbl > MeanIR; augmentation would be a no-op",
            cfg.imr_threshold
        )));
    }
    let minority = minority_instances(train_set, &ls);
    let max_attempts = cfg.max_attempts.unwrap_or(100 * num);
    if max_attempts < num {
        return Err(SampleError::InvalidConfig(format!(
            "max_attempts {max_attempts} is below the target count {num}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut instances = Vec::with_capacity(num);
    let mut rejected = 0usize;
    let mut attempts = 0usize;
    while instances.len() < num {
        if attempts >= max_attempts {
            return Err(SampleError::Starvation {
                attempts,
                accepted: instances.len(),
                needed: num,
                rate: instances.len() as f64 / attempts as f64,
            });
        }
        attempts += 1;
        let seed_index = minority[rng.random_range(0..minority.len())];
        let x_norm = model.scaler.transform_row(train_set.feature_row(seed_index));
        let column = Matrix::from_fn(x_norm.len(), 1, |f, _| x_norm[f]);
        let zx = model.embed_features(&column);
        let xrec = model.feature_decoder.forward(&zx);
        let score_logits = model.label_decoder.forward(&zx);
        let scores: Vec<f64> = (0..score_logits.rows())
            .map(|j| sigmoid(score_logits.get(j, 0)))
            .collect();
        let labels = binarize(&scores, &model.thresholds);
        if labels.iter().all(|&y| y == 0) {
            rejected += 1;
            continue;
        }
        let features =
            model
                .scaler
                .inverse_row(&(0..xrec.rows()).map(|f| xrec.get(f, 0)).collect::<Vec<_>>());
        instances.push(SyntheticInstance {
            features,
            labels,
            seed_index,
        });
    }
    Ok(GenerationReport {
        instances,
        rejected_all_zero: rejected,
        attempts,
        minority_labels: ls,
    })
}

/// Append synthetic instances to the dataset, preserving row order.
pub fn augment(
    dataset: &MultiLabelDataset,
    synthetic: &[SyntheticInstance],
) -> Result<MultiLabelDataset, DataError> {
    dataset.with_appended(
        synthetic
            .iter()
            .map(|s| (s.features.clone(), s.labels.clone())),
    )
}

/// A resampled dataset plus any warnings raised along the way.
#[derive(Debug, Clone)]
pub struct SampleOutput {
    pub dataset: MultiLabelDataset,
    pub warnings: Vec<String>,
}

/// Random oversampling: append round(p·n) exact copies drawn uniformly with
/// replacement from the minority instance set.
pub fn mlros(
    dataset: &MultiLabelDataset,
    p: f64,
    imr_threshold: f64,
    seed: u64,
) -> Result<SampleOutput, SampleError> {
    let num = target_count(p, dataset.num_instances())?;
    let profile = compute_profile(dataset)?;
    let ls = minority_labels(&profile, imr_threshold);
    let minority = minority_instances(dataset, &ls);
    if minority.is_empty() {
        return Ok(SampleOutput {
            dataset: dataset.clone(),
            warnings: vec!["no minority instances; oversampling is a no-op".into()],
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..num).map(|_| {
        let i = minority[rng.random_range(0..minority.len())];
        (dataset.feature_row(i).to_vec(), dataset.label_row(i).to_vec())
    });
    let augmented = dataset.with_appended(rows)?;
    Ok(SampleOutput {
        dataset: augmented,
        warnings: Vec::new(),
    })
}

/// Random undersampling: remove round(p·n) instances drawn uniformly without
/// replacement from the non-minority instances that carry at least one
/// majority label (IRlbl < MeanIR). Minority instances are never removed.
pub fn mlrus(
    dataset: &MultiLabelDataset,
    p: f64,
    imr_threshold: f64,
    seed: u64,
) -> Result<SampleOutput, SampleError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SampleError::InvalidConfig(format!(
            "undersampling rate p={p} must lie in (0,1)"
        )));
    }
    let num = (p * dataset.num_instances() as f64).round() as usize;
    let profile = compute_profile(dataset)?;
    let ls = minority_labels(&profile, imr_threshold);
    let minority = minority_instances(dataset, &ls);
    let in_minority: Vec<bool> = {
        let mut flags = vec![false; dataset.num_instances()];
        for &i in &minority {
            flags[i] = true;
        }
        flags
    };
    let majority_label_flags: Vec<bool> = (0..dataset.num_labels())
        .map(|j| profile.irlbl[j].is_finite() && profile.irlbl[j] < profile.mean_ir)
        .collect();
    let eligible: Vec<usize> = (0..dataset.num_instances())
        .filter(|&i| {
            !in_minority[i]
                && dataset
                    .label_row(i)
                    .iter()
                    .enumerate()
                    .any(|(j, &y)| y == 1 && majority_label_flags[j])
        })
        .collect();

    let mut warnings = Vec::new();
    if eligible.is_empty() {
        return Ok(SampleOutput {
            dataset: dataset.clone(),
            warnings: vec!["no eligible majority instances; undersampling is a no-op".into()],
        });
    }
    let remove: Vec<usize> = if eligible.len() <= num {
        if eligible.len() < num {
            warnings.push(format!(
                "eligible pool ({}) smaller than removal quota ({num}); removing the whole pool",
                eligible.len()
            ));
        }
        eligible
    } else {
        // partial Fisher-Yates over the eligible pool
        let mut pool = eligible;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..num {
            let swap = k + rng.random_range(0..pool.len() - k);
            pool.swap(k, swap);
        }
        pool.truncate(num);
        pool
    };
    let removed: std::collections::HashSet<usize> = remove.iter().copied().collect();
    let keep: Vec<usize> = (0..dataset.num_instances())
        .filter(|i| !removed.contains(i))
        .collect();
    Ok(SampleOutput {
        dataset: dataset.select_rows(&keep)?,
        warnings,
    })
}

/// Nearest positive neighbors of `target` within `pool` (excluding itself),
/// ties broken by lower instance index.
fn nearest_neighbors(
    dataset: &MultiLabelDataset,
    target: usize,
    pool: &[usize],
    k: usize,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = pool
        .iter()
        .filter(|&&i| i != target)
        .map(|&i| {
            let dist: f64 = dataset
                .feature_row(target)
                .iter()
                .zip(dataset.feature_row(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (dist, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}

/// SMOTE-style interpolation for each positive instance of each minority
/// label; labels aggregated by the Ranking rule (present in more than half
/// of the seed+neighbors set).
pub fn mlsmote(
    dataset: &MultiLabelDataset,
    k: usize,
    imr_threshold: f64,
    seed: u64,
) -> Result<SampleOutput, SampleError> {
    if k == 0 {
        return Err(SampleError::InvalidConfig("k must be at least 1".into()));
    }
    let profile = compute_profile(dataset)?;
    let ls = minority_labels(&profile, imr_threshold);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut new_rows: Vec<(Vec<f64>, Vec<u8>)> = Vec::new();
    for &label in &ls {
        let positives: Vec<usize> = (0..dataset.num_instances())
            .filter(|&i| dataset.label_row(i)[label] == 1)
            .collect();
        if positives.len() < 2 {
            warnings.push(format!(
                "label {} has {} positive instance(s); skipping",
                dataset.label_names()[label],
                positives.len()
            ));
            continue;
        }
        for &seed_idx in &positives {
            let neighbors = nearest_neighbors(dataset, seed_idx, &positives, k);
            let reference = neighbors[rng.random_range(0..neighbors.len())];
            let u: f64 = rng.random();
            let x_seed = dataset.feature_row(seed_idx);
            let x_ref = dataset.feature_row(reference);
            let features: Vec<f64> = x_seed
                .iter()
                .zip(x_ref)
                .map(|(s, r)| s + u * (r - s))
                .collect();
            // Ranking aggregation over {seed} ∪ neighbors.
            let group_size = neighbors.len() + 1;
            let labels: Vec<u8> = (0..dataset.num_labels())
                .map(|j| {
                    let count = dataset.label_row(seed_idx)[j] as usize
                        + neighbors
                            .iter()
                            .map(|&i| dataset.label_row(i)[j] as usize)
                            .sum::<usize>();
                    u8::from(2 * count > group_size)
                })
                .collect();
            new_rows.push((features, labels));
        }
    }
    if new_rows.is_empty() && ls.is_empty() {
        warnings.push("no minority labels; dataset unchanged".into());
    }
    let augmented = dataset.with_appended(new_rows)?;
    Ok(SampleOutput {
        dataset: augmented,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 10 instances; label 1 rare (2 positives) so that ImR = 4 > threshold 3
    /// and IRlbl > MeanIR.
    fn fixture() -> MultiLabelDataset {
        let features: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (10 - i) as f64]).collect();
        let mut labels = vec![vec![1u8, 0u8]; 10];
        labels[3][1] = 1;
        labels[7][1] = 1;
        MultiLabelDataset::new(
            features,
            labels,
            vec!["f1".into(), "f2".into()],
            vec!["common".into(), "rare".into()],
        )
        .unwrap()
    }

    #[test]
    fn mlros_appends_exact_copies() {
        let ds = fixture();
        let out = mlros(&ds, 0.3, 3.0, 11).unwrap();
        assert_eq!(out.dataset.num_instances(), 13);
        let minority = [3usize, 7];
        for i in 10..13 {
            let row = out.dataset.feature_row(i);
            assert!(
                minority
                    .iter()
                    .any(|&m| ds.feature_row(m) == row && ds.label_row(m) == out.dataset.label_row(i)),
                "appended row {i} is not a copy of a minority instance"
            );
        }
        // first 10 rows untouched
        for i in 0..10 {
            assert_eq!(ds.feature_row(i), out.dataset.feature_row(i));
        }
    }

    #[test]
    fn mlros_matches_reference_draw_replay() {
        let ds = fixture();
        let seed = 29;
        let out = mlros(&ds, 0.5, 3.0, seed).unwrap();
        // independent replay of the documented draw sequence
        let minority = crate::imbalance::minority_instances(
            &ds,
            &crate::imbalance::minority_labels(&compute_profile(&ds).unwrap(), 3.0),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for copy in 0..5 {
            let expect = minority[rng.random_range(0..minority.len())];
            assert_eq!(out.dataset.feature_row(10 + copy), ds.feature_row(expect));
            assert_eq!(out.dataset.label_row(10 + copy), ds.label_row(expect));
        }
    }

    #[test]
    fn mlros_without_minority_is_noop() {
        let ds = MultiLabelDataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1]],
            vec!["f".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let out = mlros(&ds, 0.5, 10.0, 1).unwrap();
        assert_eq!(out.dataset, ds);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn mlrus_protects_minority_instances() {
        let ds = fixture();
        let out = mlrus(&ds, 0.2, 3.0, 5).unwrap();
        assert_eq!(out.dataset.num_instances(), 8);
        // rows 3 and 7 (the minority ones) must survive
        let survivors: Vec<&[f64]> = (0..8).map(|i| out.dataset.feature_row(i)).collect();
        assert!(survivors.contains(&ds.feature_row(3)));
        assert!(survivors.contains(&ds.feature_row(7)));
    }

    #[test]
    fn mlrus_removes_whole_pool_when_short() {
        // n=5: one minority positive (label rare on row 0 only? need ImR>3)…
        // build: label "rare" positive on row 0; the other 4 rows eligible.
        let features: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let mut labels = vec![vec![1u8, 0u8]; 5];
        labels[0][1] = 1;
        let ds = MultiLabelDataset::new(
            features,
            labels,
            vec!["f".into()],
            vec!["common".into(), "rare".into()],
        )
        .unwrap();
        let out = mlrus(&ds, 0.9, 3.0, 1).unwrap();
        assert_eq!(out.dataset.num_instances(), 1);
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.dataset.feature_row(0), ds.feature_row(0));
    }

    #[test]
    fn mlrus_is_deterministic() {
        let ds = fixture();
        let a = mlrus(&ds, 0.2, 3.0, 5).unwrap();
        let b = mlrus(&ds, 0.2, 3.0, 5).unwrap();
        assert_eq!(a.dataset, b.dataset);
    }

    #[test]
    fn mlsmote_interpolates_on_segment() {
        let ds = fixture();
        let out = mlsmote(&ds, 1, 3.0, 13).unwrap();
        // label "rare" has positives {3, 7}: 2 synthetic rows appended
        assert_eq!(out.dataset.num_instances(), 12);
        for i in 10..12 {
            let row = out.dataset.feature_row(i);
            let (lo, hi) = (3.0f64.min(7.0), 7.0f64);
            assert!(row[0] >= lo && row[0] <= hi, "x of synthetic row outside segment");
        }
    }

    #[test]
    fn mlsmote_degenerate_neighborhood_copies_seed() {
        // three identical positives: interpolation collapses to the seed
        let features = vec![
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![0.2, 0.4],
            vec![0.4, 0.2],
            vec![0.6, 0.1],
            vec![0.8, 0.3],
            vec![0.9, 0.9],
            vec![0.5, 0.5],
        ];
        let mut labels = vec![vec![1u8, 0u8]; 10];
        for row in labels.iter_mut().take(3) {
            row[1] = 1;
        }
        let ds = MultiLabelDataset::new(
            features,
            labels,
            vec!["a".into(), "b".into()],
            vec!["common".into(), "rare".into()],
        )
        .unwrap();
        let profile = compute_profile(&ds).unwrap();
        assert!(minority_labels(&profile, 2.0).contains(&1));
        let out = mlsmote(&ds, 2, 2.0, 3).unwrap();
        assert_eq!(out.dataset.num_instances(), 13);
        for i in 10..13 {
            assert_eq!(out.dataset.feature_row(i), &[1.0, 1.0]);
            assert_eq!(out.dataset.label_row(i), ds.label_row(0));
        }
    }

    #[test]
    fn mlsmote_skips_single_positive_labels() {
        let features: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let mut labels = vec![vec![1u8, 0u8]; 8];
        labels[2][1] = 1;
        let ds = MultiLabelDataset::new(
            features,
            labels,
            vec!["f".into()],
            vec!["common".into(), "rare".into()],
        )
        .unwrap();
        let out = mlsmote(&ds, 5, 3.0, 9).unwrap();
        assert_eq!(out.dataset.num_instances(), 8);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("rare"));
    }
}
