//! Built-in multi-label classifiers (binary relevance over logistic
//! regression, MLkNN) and the Macro-F / Macro-AUC / Ranking Loss metrics.

use crate::aemlo;
use crate::dataset::MultiLabelDataset;
use crate::nn::{sigmoid, Matrix};
use crate::seeds::derive_seed;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("classifier training diverged: {0}")]
    Diverged(String),
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
}

/// Scores and thresholded labels for a batch of instances (row per instance).
#[derive(Debug, Clone)]
pub struct Prediction {
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<Vec<u8>>,
}

/// A trained multi-label classifier that can score a test set.
pub trait MultiLabelClassifier {
    fn predict(&self, dataset: &MultiLabelDataset) -> Result<Prediction, EvalError>;
}

// ---------------------------------------------------------------------------
// Binary relevance with logistic regression base learners
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrConfig {
    /// L2 penalty coefficient (bias excluded).
    pub reg_strength: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for BrConfig {
    fn default() -> Self {
        BrConfig {
            reg_strength: 1e-4,
            epochs: 1000,
            lr: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum LabelLearner {
    /// The label was constant in training; predict that constant.
    Constant(u8),
    Logistic { weights: Vec<f64>, bias: f64 },
}

/// One independent L2-regularized logistic regression per label, trained by
/// full-batch gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrModel {
    learners: Vec<LabelLearner>,
    num_features: usize,
}

pub fn train_br(train: &MultiLabelDataset, cfg: &BrConfig) -> Result<BrModel, EvalError> {
    if cfg.epochs == 0 {
        return Err(EvalError::InvalidConfig("epochs must be at least 1".into()));
    }
    let n = train.num_instances();
    let d = train.num_features();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "br-init"));
    let mut learners = Vec::with_capacity(train.num_labels());
    for j in 0..train.num_labels() {
        let targets = train.label_column(j);
        let positives: usize = targets.iter().map(|&t| t as usize).sum();
        if positives == 0 || positives == n {
            // keep the rng stream aligned across labels
            for _ in 0..d {
                let _: f64 = rng.random();
            }
            learners.push(LabelLearner::Constant(u8::from(positives == n)));
            continue;
        }
        let mut weights: Vec<f64> = (0..d).map(|_| rng.random_range(-0.01..0.01)).collect();
        let mut bias = 0.0f64;
        for epoch in 0..cfg.epochs {
            let mut grad_w = vec![0.0f64; d];
            let mut grad_b = 0.0f64;
            let mut loss = 0.0f64;
            for (i, &target) in targets.iter().enumerate() {
                let x = train.feature_row(i);
                let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
                let p = sigmoid(z);
                let y = target as f64;
                let err = p - y;
                for (g, &v) in grad_w.iter_mut().zip(x) {
                    *g += err * v;
                }
                grad_b += err;
                // numerically safe cross-entropy via the logit
                loss += z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).ln();
            }
            let inv_n = 1.0 / n as f64;
            loss = loss * inv_n
                + 0.5 * cfg.reg_strength * weights.iter().map(|w| w * w).sum::<f64>();
            if !loss.is_finite() {
                return Err(EvalError::Diverged(format!(
                    "non-finite logistic loss for label {j} at epoch {epoch}"
                )));
            }
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= cfg.lr * (g * inv_n + cfg.reg_strength * *w);
            }
            bias -= cfg.lr * grad_b * inv_n;
        }
        learners.push(LabelLearner::Logistic { weights, bias });
    }
    Ok(BrModel {
        learners,
        num_features: d,
    })
}

impl MultiLabelClassifier for BrModel {
    fn predict(&self, dataset: &MultiLabelDataset) -> Result<Prediction, EvalError> {
        if dataset.num_features() != self.num_features {
            return Err(EvalError::SchemaMismatch(format!(
                "model expects {} features, dataset has {}",
                self.num_features,
                dataset.num_features()
            )));
        }
        let mut scores = Vec::with_capacity(dataset.num_instances());
        let mut labels = Vec::with_capacity(dataset.num_instances());
        for i in 0..dataset.num_instances() {
            let x = dataset.feature_row(i);
            let mut row_scores = Vec::with_capacity(self.learners.len());
            let mut row_labels = Vec::with_capacity(self.learners.len());
            for learner in &self.learners {
                let (score, label) = match learner {
                    LabelLearner::Constant(c) => (f64::from(*c), *c),
                    LabelLearner::Logistic { weights, bias } => {
                        let z: f64 =
                            weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
                        let p = sigmoid(z);
                        (p, u8::from(p >= 0.5))
                    }
                };
                row_scores.push(score);
                row_labels.push(label);
            }
            scores.push(row_scores);
            labels.push(row_labels);
        }
        Ok(Prediction { scores, labels })
    }
}

// ---------------------------------------------------------------------------
// MLkNN
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlknnConfig {
    pub k: usize,
    /// Laplace smoothing strength.
    pub smoothing: f64,
}

impl Default for MlknnConfig {
    fn default() -> Self {
        MlknnConfig {
            k: 10,
            smoothing: 1.0,
        }
    }
}

/// MLkNN: Bayesian posteriors over the number of positive neighbors per
/// label. Euclidean distance, neighbor ties broken by lower instance index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlknnModel {
    k: usize,
    priors: Vec<f64>,
    /// P(count | label present), per label, count in 0..=k.
    cond_pos: Vec<Vec<f64>>,
    /// P(count | label absent).
    cond_neg: Vec<Vec<f64>>,
    train_features: Vec<Vec<f64>>,
    train_labels: Vec<Vec<u8>>,
}

/// k nearest rows of `pool` to `target` (excluding `exclude` if given).
fn knn_indices(
    pool: &[Vec<f64>],
    target: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = pool
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, row)| {
            let dist: f64 = row
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (dist, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn train_mlknn(train: &MultiLabelDataset, cfg: &MlknnConfig) -> Result<MlknnModel, EvalError> {
    let n = train.num_instances();
    let q = train.num_labels();
    let k = cfg.k;
    let s = cfg.smoothing;
    if k == 0 {
        return Err(EvalError::InvalidConfig("k must be at least 1".into()));
    }
    if k >= n {
        return Err(EvalError::InvalidConfig(format!(
            "k={k} requires more than k training instances, got {n}"
        )));
    }
    let features: Vec<Vec<f64>> = (0..n).map(|i| train.feature_row(i).to_vec()).collect();
    let labels: Vec<Vec<u8>> = (0..n).map(|i| train.label_row(i).to_vec()).collect();

    let priors: Vec<f64> = (0..q)
        .map(|j| {
            let pos: usize = labels.iter().map(|row| row[j] as usize).sum();
            (s + pos as f64) / (2.0 * s + n as f64)
        })
        .collect();

    // Leave-one-out neighbor counts.
    let mut count_pos = vec![vec![0usize; k + 1]; q];
    let mut count_neg = vec![vec![0usize; k + 1]; q];
    for i in 0..n {
        let neighbors = knn_indices(&features, &features[i], k, Some(i));
        for j in 0..q {
            let c: usize = neighbors.iter().map(|&t| labels[t][j] as usize).sum();
            if labels[i][j] == 1 {
                count_pos[j][c] += 1;
            } else {
                count_neg[j][c] += 1;
            }
        }
    }
    let smooth = |counts: &[usize]| -> Vec<f64> {
        let total: usize = counts.iter().sum();
        counts
            .iter()
            .map(|&c| (s + c as f64) / (s * (k + 1) as f64 + total as f64))
            .collect()
    };
    Ok(MlknnModel {
        k,
        priors,
        cond_pos: count_pos.iter().map(|c| smooth(c)).collect(),
        cond_neg: count_neg.iter().map(|c| smooth(c)).collect(),
        train_features: features,
        train_labels: labels,
    })
}

impl MlknnModel {
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// (P(count|present), P(count|absent)) tables for one label.
    pub fn conditionals(&self, label: usize) -> (&[f64], &[f64]) {
        (&self.cond_pos[label], &self.cond_neg[label])
    }

    /// Posterior score P(present | count of positive neighbors).
    pub fn posterior(&self, label: usize, count: usize) -> f64 {
        let evidence_pos = self.priors[label] * self.cond_pos[label][count];
        let evidence_neg = (1.0 - self.priors[label]) * self.cond_neg[label][count];
        evidence_pos / (evidence_pos + evidence_neg)
    }
}

impl MultiLabelClassifier for MlknnModel {
    fn predict(&self, dataset: &MultiLabelDataset) -> Result<Prediction, EvalError> {
        if dataset.num_features() != self.train_features[0].len() {
            return Err(EvalError::SchemaMismatch(format!(
                "model expects {} features, dataset has {}",
                self.train_features[0].len(),
                dataset.num_features()
            )));
        }
        let q = self.priors.len();
        let mut scores = Vec::with_capacity(dataset.num_instances());
        let mut labels = Vec::with_capacity(dataset.num_instances());
        for i in 0..dataset.num_instances() {
            let neighbors = knn_indices(&self.train_features, dataset.feature_row(i), self.k, None);
            let mut row_scores = Vec::with_capacity(q);
            let mut row_labels = Vec::with_capacity(q);
            for j in 0..q {
                let c: usize = neighbors
                    .iter()
                    .map(|&t| self.train_labels[t][j] as usize)
                    .sum();
                let score = self.posterior(j, c);
                row_scores.push(score);
                row_labels.push(u8::from(score >= 0.5));
            }
            scores.push(row_scores);
            labels.push(row_labels);
        }
        Ok(Prediction { scores, labels })
    }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Per-label F1 (0 when 2TP+FP+FN = 0) and their mean over all labels.
pub fn macro_f(pred_labels: &[Vec<u8>], truth: &[Vec<u8>]) -> (f64, Vec<f64>) {
    assert_eq!(pred_labels.len(), truth.len(), "row count mismatch");
    let q = truth.first().map_or(0, Vec::len);
    let mut per_label = Vec::with_capacity(q);
    for j in 0..q {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (pred, actual) in pred_labels.iter().zip(truth) {
            match (pred[j], actual[j]) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        per_label.push(if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        });
    }
    let macro_f = per_label.iter().sum::<f64>() / q as f64;
    (macro_f, per_label)
}

#[derive(Debug, Clone)]
pub struct MacroAuc {
    pub macro_auc: f64,
    /// Per-label AUC; NaN marks labels skipped for missing positives or
    /// negatives in the truth.
    pub per_label: Vec<f64>,
    pub skipped: Vec<usize>,
}

/// Mann-Whitney AUC with ties counted 0.5 for one label.
fn label_auc(scores: &[f64], truth: &[u8]) -> Option<f64> {
    let n_pos = truth.iter().filter(|&&t| t == 1).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut wins = 0.0f64;
    for (sp, _) in scores.iter().zip(truth).filter(|(_, &t)| t == 1) {
        for (sn, _) in scores.iter().zip(truth).filter(|(_, &t)| t == 0) {
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    Some(wins / (n_pos * n_neg) as f64)
}

/// Macro-averaged AUC over labels with both classes present in the truth.
pub fn macro_auc(scores: &[Vec<f64>], truth: &[Vec<u8>]) -> Result<MacroAuc, EvalError> {
    assert_eq!(scores.len(), truth.len(), "row count mismatch");
    let q = truth.first().map_or(0, Vec::len);
    let mut per_label = Vec::with_capacity(q);
    let mut skipped = Vec::new();
    let mut defined = Vec::new();
    for j in 0..q {
        let col_scores: Vec<f64> = scores.iter().map(|row| row[j]).collect();
        let col_truth: Vec<u8> = truth.iter().map(|row| row[j]).collect();
        match label_auc(&col_scores, &col_truth) {
            Some(auc) => {
                per_label.push(auc);
                defined.push(auc);
            }
            None => {
                per_label.push(f64::NAN);
                skipped.push(j);
            }
        }
    }
    if defined.is_empty() {
        return Err(EvalError::UndefinedMetric(
            "every label lacks positives or negatives; Macro-AUC undefined".into(),
        ));
    }
    Ok(MacroAuc {
        macro_auc: defined.iter().sum::<f64>() / defined.len() as f64,
        per_label,
        skipped,
    })
}

/// Mean discordant-pair fraction over instances with both positive and
/// negative labels; identical to the training-side exact ranking loss.
pub fn ranking_loss_metric(scores: &[Vec<f64>], truth: &[Vec<u8>]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), truth.len(), "row count mismatch");
    let n = scores.len();
    let q = truth.first().map_or(0, Vec::len);
    // column-convention matrices for the shared implementation
    let score_m = Matrix::from_fn(q, n, |j, i| scores[i][j]);
    let truth_m = Matrix::from_fn(q, n, |j, i| f64::from(truth[i][j]));
    aemlo::ranking_loss_exact(&score_m, &truth_m).map_err(|_| {
        EvalError::UndefinedMetric(
            "every instance lacks a positive or a negative label; ranking loss undefined".into(),
        )
    })
}

/// Full evaluation report for one classifier on one test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f: f64,
    pub macro_auc: f64,
    pub ranking_loss: f64,
    pub per_label_f: Vec<f64>,
    /// NaN (null in JSON) marks skipped labels.
    pub per_label_auc: Vec<f64>,
    pub skipped_labels: Vec<usize>,
}

pub fn evaluate(
    classifier: &dyn MultiLabelClassifier,
    test: &MultiLabelDataset,
) -> Result<EvalReport, EvalError> {
    let prediction = classifier.predict(test)?;
    evaluate_prediction(&prediction, test)
}

pub fn evaluate_prediction(
    prediction: &Prediction,
    test: &MultiLabelDataset,
) -> Result<EvalReport, EvalError> {
    let truth: Vec<Vec<u8>> = (0..test.num_instances())
        .map(|i| test.label_row(i).to_vec())
        .collect();
    let (macro_f_value, per_label_f) = macro_f(&prediction.labels, &truth);
    let auc = macro_auc(&prediction.scores, &truth)?;
    let ranking_loss = ranking_loss_metric(&prediction.scores, &truth)?;
    Ok(EvalReport {
        macro_f: macro_f_value,
        macro_auc: auc.macro_auc,
        ranking_loss,
        per_label_f,
        per_label_auc: auc.per_label,
        skipped_labels: auc.skipped,
    })
}
