//! Per-label and dataset-level imbalance statistics, plus minority label and
//! instance identification.
//!
//! For label j with N¹ⱼ positives: IRlblⱼ = max_k N¹ₖ / N¹ⱼ and
//! ImRⱼ = max(N¹ⱼ, N⁰ⱼ) / min(N¹ⱼ, N⁰ⱼ). MeanIR averages IRlbl over labels
//! with support; CVIR is its coefficient of variation (sample std / mean).

use crate::dataset::MultiLabelDataset;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImbalanceError {
    #[error("degenerate profile: no label has a positive instance")]
    DegenerateProfile,
}

/// Imbalance statistics for one dataset. Labels with zero positives carry a
/// +inf sentinel in `irlbl`/`imr` and are excluded from the aggregates and
/// from minority selection.
#[derive(Debug, Clone, Serialize)]
pub struct ImbalanceProfile {
    pub n: usize,
    /// N¹ per label.
    pub positives: Vec<usize>,
    /// N⁰ per label.
    pub negatives: Vec<usize>,
    pub irlbl: Vec<f64>,
    pub imr: Vec<f64>,
    pub mean_ir: f64,
    pub cvir: f64,
    /// Mean labels per instance.
    pub card: f64,
    /// card / q.
    pub den: f64,
    /// Labels with no positive instance (warned about, excluded from stats).
    pub zero_support_labels: Vec<usize>,
}

impl ImbalanceProfile {
    pub fn num_labels(&self) -> usize {
        self.positives.len()
    }
}

pub fn compute_profile(dataset: &MultiLabelDataset) -> Result<ImbalanceProfile, ImbalanceError> {
    let n = dataset.num_instances();
    let q = dataset.num_labels();
    let positives = dataset.label_positives();
    let max_positives = *positives.iter().max().unwrap();
    if max_positives == 0 {
        return Err(ImbalanceError::DegenerateProfile);
    }
    let negatives: Vec<usize> = positives.iter().map(|&p| n - p).collect();
    let irlbl: Vec<f64> = positives
        .iter()
        .map(|&p| {
            if p == 0 {
                f64::INFINITY
            } else {
                max_positives as f64 / p as f64
            }
        })
        .collect();
    let imr: Vec<f64> = positives
        .iter()
        .zip(&negatives)
        .map(|(&p, &neg)| {
            let lo = p.min(neg);
            let hi = p.max(neg);
            if lo == 0 {
                f64::INFINITY
            } else {
                hi as f64 / lo as f64
            }
        })
        .collect();
    let supported: Vec<f64> = irlbl.iter().copied().filter(|v| v.is_finite()).collect();
    let mean_ir = supported.iter().sum::<f64>() / supported.len() as f64;
    let cvir = if supported.len() < 2 {
        0.0
    } else {
        let var = supported
            .iter()
            .map(|v| (v - mean_ir).powi(2))
            .sum::<f64>()
            / (supported.len() - 1) as f64;
        var.sqrt() / mean_ir
    };
    let card = positives.iter().sum::<usize>() as f64 / n as f64;
    let den = card / q as f64;
    let zero_support_labels = positives
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == 0)
        .map(|(j, _)| j)
        .collect();
    Ok(ImbalanceProfile {
        n,
        positives,
        negatives,
        irlbl,
        imr,
        mean_ir,
        cvir,
        card,
        den,
        zero_support_labels,
    })
}

/// Minority label set: labels with ImR above the threshold and IRlbl above
/// MeanIR (both strict). Zero-support labels are never selected.
pub fn minority_labels(profile: &ImbalanceProfile, imr_threshold: f64) -> Vec<usize> {
    (0..profile.num_labels())
        .filter(|&j| {
            profile.positives[j] > 0
                && profile.imr[j] > imr_threshold
                && profile.irlbl[j] > profile.mean_ir
        })
        .collect()
}

/// Instances positive for at least one of the given labels, ascending.
pub fn minority_instances(dataset: &MultiLabelDataset, labels: &[usize]) -> Vec<usize> {
    (0..dataset.num_instances())
        .filter(|&i| {
            let row = dataset.label_row(i);
            labels.iter().any(|&j| row[j] == 1)
        })
        .collect()
}
