//! Shared dataset generators for the integration and acceptance tests.

use mlbalance::MultiLabelDataset;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded imbalanced multi-label dataset: n×d features over q labels, the
/// last `rare_labels` of which sit at `rare_prevalence`. Features are a
/// noisy linear image of (labels, two free latent coordinates): each
/// positive label adds its offset to a block of three coordinates, and the
/// latents mix into every coordinate. Common labels carry a strong offset
/// (easy), rare labels a weak one (rankable but prior-suppressed at a 0.5
/// decision threshold).
pub fn synthetic_imbalanced(
    n: usize,
    d: usize,
    q: usize,
    rare_labels: usize,
    rare_prevalence: f64,
    seed: u64,
) -> MultiLabelDataset {
    assert!(d >= 3 * q, "need three feature coordinates per label");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = q - rare_labels;
    let prevalence: Vec<f64> = (0..q)
        .map(|j| {
            if j < common {
                0.45 - 0.05 * j as f64
            } else {
                rare_prevalence
            }
        })
        .collect();
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row_y: Vec<u8> = prevalence
            .iter()
            .map(|&p| u8::from(rng.random::<f64>() < p))
            .collect();
        if row_y.iter().all(|&y| y == 0) {
            row_y[0] = 1;
        }
        let latent = [rng.random::<f64>(), rng.random::<f64>()];
        let mut row_x = vec![0.0f64; d];
        for (j, &y) in row_y.iter().enumerate() {
            if y == 1 {
                let offset = if j < common { 1.0 } else { 0.1 };
                for c in 0..3 {
                    row_x[3 * j + c] += offset;
                }
            }
        }
        for (f, x) in row_x.iter_mut().enumerate() {
            *x += 0.3 * latent[f % 2] + 0.02 * rng.random::<f64>();
        }
        features.push(row_x);
        labels.push(row_y);
    }
    MultiLabelDataset::new(
        features,
        labels,
        (0..d).map(|j| format!("f{j}")).collect(),
        (0..q).map(|j| format!("L{j}")).collect(),
    )
    .unwrap()
}

/// Small dense dataset for training smoke tests.
pub fn toy_dataset(n: usize, d: usize, q: usize, seed: u64) -> MultiLabelDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut row_y: Vec<u8> = (0..q)
            .map(|j| u8::from((i + j) % 4 == 0 || rng.random::<f64>() < 0.35))
            .collect();
        if row_y.iter().all(|&y| y == 0) {
            row_y[i % q] = 1;
        }
        let mut row_x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        for (j, &y) in row_y.iter().enumerate() {
            if y == 1 && j < d {
                row_x[j] = 0.5 + 0.5 * row_x[j];
            }
        }
        features.push(row_x);
        labels.push(row_y);
    }
    MultiLabelDataset::new(
        features,
        labels,
        (0..d).map(|j| format!("f{j}")).collect(),
        (0..q).map(|j| format!("L{j}")).collect(),
    )
    .unwrap()
}

/// Path of a vendored data file (repo `data/` directory).
pub fn data_path(relative: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(relative)
}
