//! Encoder/decoder oversampling model: feature and label encoders meeting in
//! a shared latent space, decoders back to each view, the three-term
//! training objective, and per-label threshold calibration.
//!
//! Batch matrices use the column convention: an input batch is dim×b with
//! one instance per column.

use crate::dataset::{FeatureScaler, MultiLabelDataset};
use crate::nn::{
    leaky_relu, leaky_relu_deriv, sigmoid, AdamConfig, AdamState, DenseLayer, Matrix,
};
use crate::seeds::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
}

/// User-facing knobs; `None` fields resolve to data-dependent defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_ortho: f64,
    pub lambda_sim: f64,
    /// Defaults to min(32, q, batch_size).
    pub latent_dim: Option<usize>,
    pub hidden_dim: usize,
    pub epochs: usize,
    /// Defaults to min(64, n_train).
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub leaky_slope: f64,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            alpha: 1.0,
            beta: 1.0,
            lambda_ortho: 1.0,
            lambda_sim: 1.0,
            latent_dim: None,
            hidden_dim: 512,
            epochs: 100,
            batch_size: None,
            lr: 1e-3,
            leaky_slope: 0.01,
            seed: 42,
        }
    }
}

impl TrainSettings {
    /// Materialize the defaults against a concrete training set and validate
    /// the invariants (alpha, beta > 0; 1 ≤ l ≤ batch ≤ n; epochs ≥ 1).
    pub fn resolve(&self, n_train: usize, num_labels: usize) -> Result<TrainConfig, TrainError> {
        let weights_positive = self.alpha > 0.0 && self.beta > 0.0;
        if !weights_positive {
            return Err(TrainError::InvalidConfig(format!(
                "alpha and beta must be positive, got {} and {}",
                self.alpha, self.beta
            )));
        }
        if self.lambda_ortho < 0.0 || self.lambda_sim < 0.0 {
            return Err(TrainError::InvalidConfig(
                "lambda_ortho and lambda_sim must be non-negative".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(TrainError::InvalidConfig("hidden_dim must be at least 1".into()));
        }
        let lr_positive = self.lr > 0.0;
        if !lr_positive {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        let batch_size = self.batch_size.unwrap_or_else(|| n_train.min(64));
        if batch_size == 0 || batch_size > n_train {
            return Err(TrainError::InvalidConfig(format!(
                "batch size {batch_size} must be in 1..={n_train}"
            )));
        }
        let latent_dim = self
            .latent_dim
            .unwrap_or_else(|| 32usize.min(num_labels).min(batch_size));
        if latent_dim == 0 || latent_dim > batch_size {
            return Err(TrainError::InvalidConfig(format!(
                "latent dim {latent_dim} must be in 1..={batch_size} (batch size)"
            )));
        }
        Ok(TrainConfig {
            alpha: self.alpha,
            beta: self.beta,
            lambda_ortho: self.lambda_ortho,
            lambda_sim: self.lambda_sim,
            latent_dim,
            hidden_dim: self.hidden_dim,
            epochs: self.epochs,
            batch_size,
            lr: self.lr,
            leaky_slope: self.leaky_slope,
            seed: self.seed,
        })
    }
}

/// Fully resolved, validated training configuration; stored in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_ortho: f64,
    pub lambda_sim: f64,
    pub latent_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub leaky_slope: f64,
    pub seed: u64,
}

/// The four learned maps plus per-label thresholds and the feature scaler.
/// Layer order is fixed; the flat parameter vector used by the optimizer and
/// the gradient checker follows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AemloModel {
    /// d→hidden→l, leaky ReLU after each layer.
    pub feature_encoder: Vec<DenseLayer>,
    /// q→hidden→l, leaky ReLU after each layer.
    pub label_encoder: Vec<DenseLayer>,
    /// l→d, linear.
    pub feature_decoder: DenseLayer,
    /// l→q; sigmoid is applied where scores are consumed.
    pub label_decoder: DenseLayer,
    /// Per-label bipartition thresholds in (0,1).
    pub thresholds: Vec<f64>,
    pub scaler: FeatureScaler,
    pub config: TrainConfig,
}

/// Outputs of one training-orientation forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutputs {
    /// l×b feature embeddings.
    pub zx: Matrix,
    /// l×b label embeddings.
    pub zy: Matrix,
    /// d×b feature reconstructions.
    pub xrec: Matrix,
    /// q×b label scores in (0,1).
    pub yscores: Matrix,
}

struct ForwardCache {
    a1x: Matrix,
    h1x: Matrix,
    a2x: Matrix,
    zx: Matrix,
    a1y: Matrix,
    h1y: Matrix,
    a2y: Matrix,
    zy: Matrix,
    xrec: Matrix,
    /// Pre-sigmoid label decoder output.
    slog: Matrix,
}

/// Loss term values: phi (embedding), psi (feature), gamma (label surrogate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub embedding: f64,
    pub feature: f64,
    pub label: f64,
}

impl LossTerms {
    pub fn total(&self, config: &TrainConfig) -> f64 {
        self.embedding + config.alpha * self.feature + config.beta * self.label
    }
}

impl AemloModel {
    /// Fresh model with Glorot-uniform layers drawn from the config seed's
    /// "init" stream and all thresholds at 0.5.
    pub fn init(d: usize, q: usize, config: TrainConfig, scaler: FeatureScaler) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "init"));
        let h = config.hidden_dim;
        let l = config.latent_dim;
        let feature_encoder = vec![
            DenseLayer::glorot(d, h, &mut rng),
            DenseLayer::glorot(h, l, &mut rng),
        ];
        let label_encoder = vec![
            DenseLayer::glorot(q, h, &mut rng),
            DenseLayer::glorot(h, l, &mut rng),
        ];
        let feature_decoder = DenseLayer::glorot(l, d, &mut rng);
        let label_decoder = DenseLayer::glorot(l, q, &mut rng);
        AemloModel {
            feature_encoder,
            label_encoder,
            feature_decoder,
            label_decoder,
            thresholds: vec![0.5; q],
            scaler,
            config,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_encoder[0].input_dim()
    }

    pub fn label_dim(&self) -> usize {
        self.label_encoder[0].input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.feature_decoder.input_dim()
    }

    /// Feature embedding zx = F_ex(Xb); input d×b, output l×b.
    pub fn embed_features(&self, xb: &Matrix) -> Matrix {
        let slope = self.config.leaky_slope;
        let h = self.feature_encoder[0].forward(xb).map(|v| leaky_relu(v, slope));
        self.feature_encoder[1].forward(&h).map(|v| leaky_relu(v, slope))
    }

    /// Label embedding zy = F_ey(Yb); input q×b, output l×b.
    pub fn embed_labels(&self, yb: &Matrix) -> Matrix {
        let slope = self.config.leaky_slope;
        let h = self.label_encoder[0].forward(yb).map(|v| leaky_relu(v, slope));
        self.label_encoder[1].forward(&h).map(|v| leaky_relu(v, slope))
    }

    /// Cross-modal label scores sigmoid(F_dy(F_ex(Xb))), q×b. This is the
    /// scoring used at generation time and for threshold calibration.
    pub fn cross_modal_scores(&self, xb: &Matrix) -> Matrix {
        let zx = self.embed_features(xb);
        self.label_decoder.forward(&zx).map(sigmoid)
    }

    /// Feature reconstruction F_dx(F_ex(Xb)), d×b.
    pub fn reconstruct_features(&self, xb: &Matrix) -> Matrix {
        let zx = self.embed_features(xb);
        self.feature_decoder.forward(&zx)
    }

    /// Training-orientation forward pass.
    pub fn forward(&self, xb: &Matrix, yb: &Matrix) -> ForwardOutputs {
        let cache = self.forward_cached(xb, yb);
        ForwardOutputs {
            zx: cache.zx,
            zy: cache.zy,
            xrec: cache.xrec,
            yscores: cache.slog.map(sigmoid),
        }
    }

    fn forward_cached(&self, xb: &Matrix, yb: &Matrix) -> ForwardCache {
        assert!(xb.cols() >= 1, "batch must be non-empty");
        assert_eq!(xb.cols(), yb.cols(), "feature/label batch sizes differ");
        let slope = self.config.leaky_slope;
        let a1x = self.feature_encoder[0].forward(xb);
        let h1x = a1x.map(|v| leaky_relu(v, slope));
        let a2x = self.feature_encoder[1].forward(&h1x);
        let zx = a2x.map(|v| leaky_relu(v, slope));
        let a1y = self.label_encoder[0].forward(yb);
        let h1y = a1y.map(|v| leaky_relu(v, slope));
        let a2y = self.label_encoder[1].forward(&h1y);
        let zy = a2y.map(|v| leaky_relu(v, slope));
        let xrec = self.feature_decoder.forward(&zx);
        let slog = self.label_decoder.forward(&zy);
        ForwardCache {
            a1x,
            h1x,
            a2x,
            zx,
            a1y,
            h1y,
            a2y,
            zy,
            xrec,
            slog,
        }
    }

    fn layers(&self) -> [&DenseLayer; 6] {
        [
            &self.feature_encoder[0],
            &self.feature_encoder[1],
            &self.label_encoder[0],
            &self.label_encoder[1],
            &self.feature_decoder,
            &self.label_decoder,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.parameter_count()).sum()
    }

    /// Flatten all parameters (per layer: weights row-major, then bias).
    pub fn to_param_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in self.layers() {
            out.extend_from_slice(layer.weights.data());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Inverse of [`to_param_vec`].
    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.parameter_count(), "parameter vector length mismatch");
        fn assign(layer: &mut DenseLayer, params: &[f64], offset: &mut usize) {
            let w_len = layer.weights.rows() * layer.weights.cols();
            layer
                .weights
                .data_mut()
                .copy_from_slice(&params[*offset..*offset + w_len]);
            *offset += w_len;
            let b_len = layer.bias.len();
            layer.bias.copy_from_slice(&params[*offset..*offset + b_len]);
            *offset += b_len;
        }
        let mut offset = 0;
        for layer in self.feature_encoder.iter_mut() {
            assign(layer, params, &mut offset);
        }
        for layer in self.label_encoder.iter_mut() {
            assign(layer, params, &mut offset);
        }
        assign(&mut self.feature_decoder, params, &mut offset);
        assign(&mut self.label_decoder, params, &mut offset);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

/// Joint-embedding penalty: Tr(C1ᵀC1) + λ(Tr(C2ᵀC2) + Tr(C3ᵀC3)) with
/// C1 = zx−zy and C2/C3 the deviations of the latent Gram matrices from I.
pub fn loss_embedding(zx: &Matrix, zy: &Matrix, lambda_ortho: f64) -> f64 {
    assert_eq!((zx.rows(), zx.cols()), (zy.rows(), zy.cols()));
    let c1 = zx.zip_map(zy, |a, b| a - b);
    let mut total = c1.frobenius_dot(&c1);
    let c2 = gram_minus_identity(zx);
    let c3 = gram_minus_identity(zy);
    total += lambda_ortho * (c2.frobenius_dot(&c2) + c3.frobenius_dot(&c3));
    total
}

fn gram_minus_identity(z: &Matrix) -> Matrix {
    let mut g = z.matmul_rhs_transposed(z);
    for i in 0..g.rows() {
        let v = g.get(i, i) - 1.0;
        g.set(i, i, v);
    }
    g
}

/// Feature reconstruction penalty M + λS: summed squared reconstruction
/// error plus the pairwise squared-distance preservation term.
pub fn loss_feature(xb: &Matrix, xrec: &Matrix, lambda_sim: f64) -> f64 {
    assert_eq!((xb.rows(), xb.cols()), (xrec.rows(), xrec.cols()));
    let diff = xrec.zip_map(xb, |a, b| a - b);
    let m = diff.frobenius_dot(&diff);
    m + lambda_sim * similarity_term(xb, xrec)
}

fn pairwise_sq_dists(x: &Matrix) -> Matrix {
    let b = x.cols();
    let d = x.rows();
    let mut out = Matrix::zeros(b, b);
    for i in 0..b {
        for j in (i + 1)..b {
            let mut acc = 0.0;
            for f in 0..d {
                let delta = x.get(f, i) - x.get(f, j);
                acc += delta * delta;
            }
            out.set(i, j, acc);
            out.set(j, i, acc);
        }
    }
    out
}

/// S = (1/(b(b−1))) Σ_{i≠j} (‖x_i−x_j‖² − ‖x'_i−x'_j‖²)²; zero for b < 2.
fn similarity_term(xb: &Matrix, xrec: &Matrix) -> f64 {
    let b = xb.cols();
    if b < 2 {
        return 0.0;
    }
    let d_orig = pairwise_sq_dists(xb);
    let d_rec = pairwise_sq_dists(xrec);
    let mut acc = 0.0;
    for i in 0..b {
        for j in 0..b {
            if i != j {
                let e = d_orig.get(i, j) - d_rec.get(i, j);
                acc += e * e;
            }
        }
    }
    acc / (b * (b - 1)) as f64
}

/// Smooth ranking surrogate on pre-sigmoid scores: per instance with at
/// least one positive and one negative label,
/// (1/(|Y||Ȳ|)) Σ_{j∈Y,k∈Ȳ} exp(s_k − s_j); other instances contribute 0.
pub fn loss_label_surrogate(score_logits: &Matrix, yb: &Matrix) -> f64 {
    assert_eq!((score_logits.rows(), score_logits.cols()), (yb.rows(), yb.cols()));
    let q = yb.rows();
    let b = yb.cols();
    let mut total = 0.0;
    for i in 0..b {
        let mut sum_pos = 0.0;
        let mut sum_neg = 0.0;
        let mut n_pos = 0usize;
        let mut n_neg = 0usize;
        for j in 0..q {
            let s = score_logits.get(j, i);
            if yb.get(j, i) == 1.0 {
                sum_pos += (-s).exp();
                n_pos += 1;
            } else {
                sum_neg += s.exp();
                n_neg += 1;
            }
        }
        if n_pos == 0 || n_neg == 0 {
            continue;
        }
        total += sum_pos * sum_neg / (n_pos * n_neg) as f64;
    }
    total
}

#[derive(Debug, Error)]
#[error("ranking loss undefined: every instance lacks a positive or a negative label")]
pub struct UndefinedRankingLoss;

/// Exact discordant-pair ranking loss: mean over usable instances of the
/// fraction of positive–negative pairs with score_pos ≤ score_neg (ties
/// count as discordant). Monotone score transforms leave it unchanged.
pub fn ranking_loss_exact(scores: &Matrix, yb: &Matrix) -> Result<f64, UndefinedRankingLoss> {
    assert_eq!((scores.rows(), scores.cols()), (yb.rows(), yb.cols()));
    let q = yb.rows();
    let b = yb.cols();
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..b {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for j in 0..q {
            if yb.get(j, i) == 1.0 {
                pos.push(scores.get(j, i));
            } else {
                neg.push(scores.get(j, i));
            }
        }
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut discordant = 0usize;
        for &sp in &pos {
            for &sn in &neg {
                if sp <= sn {
                    discordant += 1;
                }
            }
        }
        total += discordant as f64 / (pos.len() * neg.len()) as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(UndefinedRankingLoss);
    }
    Ok(total / counted as f64)
}

/// Objective value Θ = Φ + α·Ψ + β·Γ on one batch.
pub fn total_loss(model: &AemloModel, xb: &Matrix, yb: &Matrix) -> f64 {
    loss_terms(model, xb, yb).total(&model.config)
}

/// The three loss terms on one batch (unweighted).
pub fn loss_terms(model: &AemloModel, xb: &Matrix, yb: &Matrix) -> LossTerms {
    let cache = model.forward_cached(xb, yb);
    LossTerms {
        embedding: loss_embedding(&cache.zx, &cache.zy, model.config.lambda_ortho),
        feature: loss_feature(xb, &cache.xrec, model.config.lambda_sim),
        label: loss_label_surrogate(&cache.slog, yb),
    }
}

// ---------------------------------------------------------------------------
// Backward pass (reverse accumulation, hand-derived per term)
// ---------------------------------------------------------------------------

/// Gradients of the embedding penalty w.r.t. the two embedding matrices:
/// dzx = 2·C1 + 4λ·C2·zx and dzy = −2·C1 + 4λ·C3·zy.
pub fn loss_embedding_grad(zx: &Matrix, zy: &Matrix, lambda_ortho: f64) -> (Matrix, Matrix) {
    let c1 = zx.zip_map(zy, |a, b| a - b);
    let side = |z: &Matrix, sign: f64| {
        let c = gram_minus_identity(z);
        let gram_grad = c.matmul(z);
        let mut out = Matrix::zeros(z.rows(), z.cols());
        out.add_assign_scaled(&c1, 2.0 * sign);
        out.add_assign_scaled(&gram_grad, 4.0 * lambda_ortho);
        out
    };
    (side(zx, 1.0), side(zy, -1.0))
}

/// The similarity-preservation term S on its own.
pub fn loss_similarity(xb: &Matrix, xrec: &Matrix) -> f64 {
    similarity_term(xb, xrec)
}

/// Gradient of S w.r.t. the reconstruction matrix:
/// ∂S/∂x'_k = −(8/(b(b−1)))·Σ_{j≠k} (D_kj − D'_kj)·(x'_k − x'_j).
pub fn loss_similarity_grad(xb: &Matrix, xrec: &Matrix) -> Matrix {
    assert_eq!((xb.rows(), xb.cols()), (xrec.rows(), xrec.cols()));
    let b = xb.cols();
    let d = xb.rows();
    let mut grad = Matrix::zeros(d, b);
    if b < 2 {
        return grad;
    }
    let d_orig = pairwise_sq_dists(xb);
    let d_rec = pairwise_sq_dists(xrec);
    let scale = -8.0 / (b * (b - 1)) as f64;
    for k in 0..b {
        for j in 0..b {
            if j == k {
                continue;
            }
            let e = d_orig.get(k, j) - d_rec.get(k, j);
            if e == 0.0 {
                continue;
            }
            let coef = scale * e;
            for f in 0..d {
                let delta = xrec.get(f, k) - xrec.get(f, j);
                let v = grad.get(f, k) + coef * delta;
                grad.set(f, k, v);
            }
        }
    }
    grad
}

/// Gradient of M + λS w.r.t. the reconstruction matrix.
pub fn loss_feature_grad(xb: &Matrix, xrec: &Matrix, lambda_sim: f64) -> Matrix {
    let mut grad = xrec.zip_map(xb, |a, b| 2.0 * (a - b));
    if lambda_sim != 0.0 {
        grad.add_assign_scaled(&loss_similarity_grad(xb, xrec), lambda_sim);
    }
    grad
}

/// Gradient of the ranking surrogate w.r.t. the pre-sigmoid scores.
pub fn loss_label_surrogate_grad(score_logits: &Matrix, yb: &Matrix) -> Matrix {
    let q = yb.rows();
    let b = yb.cols();
    let mut grad = Matrix::zeros(q, b);
    for i in 0..b {
        let mut sum_pos = 0.0;
        let mut sum_neg = 0.0;
        let mut n_pos = 0usize;
        let mut n_neg = 0usize;
        for j in 0..q {
            let s = score_logits.get(j, i);
            if yb.get(j, i) == 1.0 {
                sum_pos += (-s).exp();
                n_pos += 1;
            } else {
                sum_neg += s.exp();
                n_neg += 1;
            }
        }
        if n_pos == 0 || n_neg == 0 {
            continue;
        }
        let w = 1.0 / (n_pos * n_neg) as f64;
        for j in 0..q {
            let s = score_logits.get(j, i);
            let g = if yb.get(j, i) == 1.0 {
                -w * (-s).exp() * sum_neg
            } else {
                w * s.exp() * sum_pos
            };
            grad.set(j, i, g);
        }
    }
    grad
}

struct LayerGrads {
    weights: Matrix,
    bias: Vec<f64>,
}

/// Backprop through one dense layer: returns (dW, db, dInput).
fn dense_backward(layer: &DenseLayer, input: &Matrix, d_out: &Matrix) -> (LayerGrads, Matrix) {
    let d_weights = d_out.matmul_rhs_transposed(input);
    let d_bias = d_out.row_sums();
    let d_input = layer.weights.transposed_matmul(d_out);
    (
        LayerGrads {
            weights: d_weights,
            bias: d_bias,
        },
        d_input,
    )
}

/// Per-term weighting applied to the gradients of `loss_terms`.
#[derive(Debug, Clone, Copy)]
struct TermWeights {
    embedding: f64,
    feature: f64,
    label: f64,
}

fn compute_gradients_weighted(
    model: &AemloModel,
    xb: &Matrix,
    yb: &Matrix,
    weights: TermWeights,
) -> (LossTerms, Vec<f64>) {
    let slope = model.config.leaky_slope;
    let cache = model.forward_cached(xb, yb);
    let terms = LossTerms {
        embedding: loss_embedding(&cache.zx, &cache.zy, model.config.lambda_ortho),
        feature: loss_feature(xb, &cache.xrec, model.config.lambda_sim),
        label: loss_label_surrogate(&cache.slog, yb),
    };

    // Decoder-side gradients, already weighted.
    let mut d_xrec = loss_feature_grad(xb, &cache.xrec, model.config.lambda_sim);
    d_xrec = d_xrec.map(|v| v * weights.feature);
    let mut d_slog = loss_label_surrogate_grad(&cache.slog, yb);
    d_slog = d_slog.map(|v| v * weights.label);

    let (g_fdx, d_zx_from_dec) = dense_backward(&model.feature_decoder, &cache.zx, &d_xrec);
    let (g_fdy, d_zy_from_dec) = dense_backward(&model.label_decoder, &cache.zy, &d_slog);

    // Latent gradients: embedding term plus the decoder paths.
    let (e_zx, e_zy) = loss_embedding_grad(&cache.zx, &cache.zy, model.config.lambda_ortho);
    let mut d_zx = e_zx.map(|v| v * weights.embedding);
    d_zx.add_assign_scaled(&d_zx_from_dec, 1.0);
    let mut d_zy = e_zy.map(|v| v * weights.embedding);
    d_zy.add_assign_scaled(&d_zy_from_dec, 1.0);

    // Feature encoder.
    let d_a2x = d_zx.zip_map(&cache.a2x, |g, a| g * leaky_relu_deriv(a, slope));
    let (g_fex1, d_h1x) = dense_backward(&model.feature_encoder[1], &cache.h1x, &d_a2x);
    let d_a1x = d_h1x.zip_map(&cache.a1x, |g, a| g * leaky_relu_deriv(a, slope));
    let (g_fex0, _) = dense_backward(&model.feature_encoder[0], xb, &d_a1x);

    // Label encoder.
    let d_a2y = d_zy.zip_map(&cache.a2y, |g, a| g * leaky_relu_deriv(a, slope));
    let (g_fey1, d_h1y) = dense_backward(&model.label_encoder[1], &cache.h1y, &d_a2y);
    let d_a1y = d_h1y.zip_map(&cache.a1y, |g, a| g * leaky_relu_deriv(a, slope));
    let (g_fey0, _) = dense_backward(&model.label_encoder[0], yb, &d_a1y);

    let mut flat = Vec::with_capacity(model.parameter_count());
    for g in [&g_fex0, &g_fex1, &g_fey0, &g_fey1, &g_fdx, &g_fdy] {
        flat.extend_from_slice(g.weights.data());
        flat.extend_from_slice(&g.bias);
    }
    (terms, flat)
}

/// Gradient of Θ w.r.t. the flat parameter vector, with the loss terms.
pub fn compute_gradients(model: &AemloModel, xb: &Matrix, yb: &Matrix) -> (LossTerms, Vec<f64>) {
    compute_gradients_weighted(
        model,
        xb,
        yb,
        TermWeights {
            embedding: 1.0,
            feature: model.config.alpha,
            label: model.config.beta,
        },
    )
}

/// Smallest |pre-activation| across both encoders on this batch. Gradient
/// checking with central differences is only trustworthy when no leaky ReLU
/// input sits within the probe step of its kink; callers can redraw batches
/// that land too close.
pub fn min_abs_preactivation(model: &AemloModel, xb: &Matrix, yb: &Matrix) -> f64 {
    let cache = model.forward_cached(xb, yb);
    [&cache.a1x, &cache.a2x, &cache.a1y, &cache.a2y]
        .iter()
        .flat_map(|m| m.data().iter())
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
}

/// Gradient of a single unweighted loss term, for verification harnesses.
pub fn compute_term_gradient(
    model: &AemloModel,
    xb: &Matrix,
    yb: &Matrix,
    term: LossTermKind,
) -> (f64, Vec<f64>) {
    let weights = match term {
        LossTermKind::Embedding => TermWeights { embedding: 1.0, feature: 0.0, label: 0.0 },
        LossTermKind::Feature => TermWeights { embedding: 0.0, feature: 1.0, label: 0.0 },
        LossTermKind::Label => TermWeights { embedding: 0.0, feature: 0.0, label: 1.0 },
    };
    let (terms, grads) = compute_gradients_weighted(model, xb, yb, weights);
    let value = match term {
        LossTermKind::Embedding => terms.embedding,
        LossTermKind::Feature => terms.feature,
        LossTermKind::Label => terms.label,
    };
    (value, grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossTermKind {
    Embedding,
    Feature,
    Label,
}

// ---------------------------------------------------------------------------
// Threshold calibration and binarization
// ---------------------------------------------------------------------------

/// Best F1 bipartition threshold for one label. Candidates are midpoints of
/// consecutive distinct sorted scores plus 0.5; ties prefer the candidate
/// closest to 0.5, then the smaller. No positives → 0.5.
pub fn best_threshold(scores: &[f64], truths: &[u8]) -> f64 {
    assert_eq!(scores.len(), truths.len());
    let total_pos: usize = truths.iter().map(|&t| t as usize).sum();
    if total_pos == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut candidates = vec![0.5];
    for w in order.windows(2) {
        let (lo, hi) = (scores[w[0]], scores[w[1]]);
        if lo != hi {
            candidates.push((lo + hi) / 2.0);
        }
    }
    let f1_at = |threshold: f64| -> f64 {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (&s, &t) in scores.iter().zip(truths) {
            if s >= threshold {
                if t == 1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let fn_ = total_pos - tp;
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let mut best = (f1_at(0.5), 0.0f64, 0.5f64);
    for &c in &candidates[1..] {
        let f1 = f1_at(c);
        let dist = (c - 0.5).abs();
        let better = f1 > best.0
            || (f1 == best.0 && dist < best.1)
            || (f1 == best.0 && dist == best.1 && c < best.2);
        if better {
            best = (f1, dist, c);
        }
    }
    best.2
}

/// Calibrate per-label thresholds on a validation set using cross-modal
/// scores, maximizing per-label F1.
pub fn calibrate_thresholds(model: &AemloModel, validation: &MultiLabelDataset) -> Vec<f64> {
    assert!(validation.num_instances() > 0);
    let xb = feature_batch(validation, None);
    let scores = model.cross_modal_scores(&xb);
    (0..validation.num_labels())
        .map(|j| {
            let s: Vec<f64> = (0..validation.num_instances())
                .map(|i| scores.get(j, i))
                .collect();
            best_threshold(&s, &validation.label_column(j))
        })
        .collect()
}

/// Per-label F1 of thresholded cross-modal scores against the labels.
pub fn validation_f1(
    model: &AemloModel,
    validation: &MultiLabelDataset,
    thresholds: &[f64],
) -> Vec<f64> {
    let xb = feature_batch(validation, None);
    let scores = model.cross_modal_scores(&xb);
    (0..validation.num_labels())
        .map(|j| {
            let truth = validation.label_column(j);
            let mut tp = 0usize;
            let mut fp = 0usize;
            let mut fn_ = 0usize;
            for (i, &t) in truth.iter().enumerate() {
                let predicted = scores.get(j, i) >= thresholds[j];
                match (predicted, t == 1) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            let denom = 2 * tp + fp + fn_;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        })
        .collect()
}

/// y[j] = 1 iff scores[j] ≥ thresholds[j].
pub fn binarize(scores: &[f64], thresholds: &[f64]) -> Vec<u8> {
    assert_eq!(scores.len(), thresholds.len(), "score/threshold length mismatch");
    scores
        .iter()
        .zip(thresholds)
        .map(|(&s, &t)| u8::from(s >= t))
        .collect()
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// One row of the per-epoch training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phi: f64,
    pub psi: f64,
    pub gamma: f64,
    pub total: f64,
    pub mean_val_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AemloModel,
    pub log: Vec<EpochRecord>,
}

/// Column batch of the selected dataset rows (all rows when `rows` is None).
pub fn feature_batch(dataset: &MultiLabelDataset, rows: Option<&[usize]>) -> Matrix {
    let d = dataset.num_features();
    match rows {
        Some(rows) => Matrix::from_fn(d, rows.len(), |f, c| dataset.feature_row(rows[c])[f]),
        None => Matrix::from_fn(d, dataset.num_instances(), |f, c| dataset.feature_row(c)[f]),
    }
}

pub fn label_batch(dataset: &MultiLabelDataset, rows: Option<&[usize]>) -> Matrix {
    let q = dataset.num_labels();
    match rows {
        Some(rows) => Matrix::from_fn(q, rows.len(), |j, c| dataset.label_row(rows[c])[j] as f64),
        None => Matrix::from_fn(q, dataset.num_instances(), |j, c| dataset.label_row(c)[j] as f64),
    }
}

/// Train on an already normalized training set: seeded shuffles into batches
/// (a trailing batch smaller than the latent dim is dropped), Adam updates
/// per batch, threshold recalibration on the validation set after each
/// epoch. Deterministic per (data, settings, seed).
pub fn train(
    train_set: &MultiLabelDataset,
    validation_set: &MultiLabelDataset,
    scaler: FeatureScaler,
    settings: &TrainSettings,
) -> Result<TrainOutcome, TrainError> {
    if !train_set.same_schema(validation_set) {
        return Err(TrainError::SchemaMismatch(
            "train and validation sets have different schemas".into(),
        ));
    }
    if scaler.num_features() != train_set.num_features() {
        return Err(TrainError::SchemaMismatch(format!(
            "scaler covers {} features, dataset has {}",
            scaler.num_features(),
            train_set.num_features()
        )));
    }
    let n = train_set.num_instances();
    let config = settings.resolve(n, train_set.num_labels())?;
    let mut model = AemloModel::init(
        train_set.num_features(),
        train_set.num_labels(),
        config.clone(),
        scaler,
    );
    let mut params = model.to_param_vec();
    let mut adam = AdamState::new(
        params.len(),
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
    );
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "shuffle"));
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);
        let mut sums = (0.0, 0.0, 0.0, 0.0);
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            if chunk.len() < config.latent_dim {
                continue; // orthonormality target I_l is unreachable
            }
            let xb = feature_batch(train_set, Some(chunk));
            let yb = label_batch(train_set, Some(chunk));
            model.set_params(&params);
            let (terms, grads) = compute_gradients(&model, &xb, &yb);
            let total = terms.total(&config);
            if !total.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch: batch_idx,
                });
            }
            adam.step(&mut params, &grads);
            sums.0 += terms.embedding;
            sums.1 += terms.feature;
            sums.2 += terms.label;
            sums.3 += total;
            batches += 1;
        }
        model.set_params(&params);
        model.thresholds = calibrate_thresholds(&model, validation_set);
        let f1s = validation_f1(&model, validation_set, &model.thresholds);
        let mean_val_f1 = f1s.iter().sum::<f64>() / f1s.len() as f64;
        let denom = batches.max(1) as f64;
        log.push(EpochRecord {
            epoch,
            phi: sums.0 / denom,
            psi: sums.1 / denom,
            gamma: sums.2 / denom,
            total: sums.3 / denom,
            mean_val_f1,
        });
    }
    model.set_params(&params);
    Ok(TrainOutcome { model, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::normalize_features;
    use crate::nn::grad_check;

    fn identity2() -> Matrix {
        Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]])
    }

    #[test]
    fn embedding_loss_identity_case() {
        let z = identity2();
        assert_eq!(loss_embedding(&z, &z.clone(), 1.0), 0.0);
    }

    #[test]
    fn embedding_loss_equal_embeddings_leave_only_gram_terms() {
        let z = Matrix::from_rows(&[vec![0.5, -1.0, 2.0], vec![1.5, 0.25, -0.75]]);
        let lambda = 0.7;
        let c = gram_minus_identity(&z);
        let expected = 2.0 * lambda * c.frobenius_dot(&c);
        assert!((loss_embedding(&z, &z.clone(), lambda) - expected).abs() < 1e-12);
    }

    #[test]
    fn embedding_loss_permutation_case() {
        let zx = identity2();
        let zy = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((loss_embedding(&zx, &zy, 1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn feature_loss_perfect_reconstruction() {
        let x = Matrix::from_rows(&[vec![0.3, 0.9], vec![1.0, -2.0]]);
        assert_eq!(loss_feature(&x, &x.clone(), 1.0), 0.0);
    }

    #[test]
    fn feature_loss_translation_keeps_similarity_term_zero() {
        let x = Matrix::from_rows(&[vec![0.3, 0.9, -0.4], vec![1.0, -2.0, 0.5]]);
        let c = [0.7, -1.3];
        let xrec = Matrix::from_fn(2, 3, |f, i| x.get(f, i) + c[f]);
        let b = 3.0;
        let expected_m = b * (c[0] * c[0] + c[1] * c[1]);
        for lambda in [0.0, 1.0, 5.0] {
            assert!((loss_feature(&x, &xrec, lambda) - expected_m).abs() < 1e-9);
        }
    }

    #[test]
    fn feature_loss_two_point_case() {
        // X = [0, 2], xrec = [0, 1]: M = 1, S = 9.
        let x = Matrix::from_rows(&[vec![0.0, 2.0]]);
        let xrec = Matrix::from_rows(&[vec![0.0, 1.0]]);
        for lambda in [0.0, 1.0, 2.5] {
            let expected = 1.0 + 9.0 * lambda;
            assert!((loss_feature(&x, &xrec, lambda) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_well_separated_is_tiny() {
        let scores = Matrix::from_rows(&[vec![25.0], vec![0.0], vec![1.0]]);
        let y = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]);
        assert!(loss_label_surrogate(&scores, &y) < 1e-8);
    }

    #[test]
    fn surrogate_equal_scores_single_pair() {
        let scores = Matrix::from_rows(&[vec![0.3], vec![0.3]]);
        let y = Matrix::from_rows(&[vec![1.0], vec![0.0]]);
        assert!((loss_label_surrogate(&scores, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn surrogate_two_pair_case() {
        // Y = {1}, Ȳ = {2,3}, scores (1, 0, 2): (e^{-1} + e) / 2.
        let scores = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![2.0]]);
        let y = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]);
        let expected = ((-1.0f64).exp() + 1.0f64.exp()) / 2.0;
        assert!((loss_label_surrogate(&scores, &y) - expected).abs() < 1e-12);
    }

    #[test]
    fn surrogate_skips_degenerate_instances() {
        let scores = Matrix::from_rows(&[vec![0.4, 0.4], vec![0.1, 0.1]]);
        let all_pos = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]);
        // first column has no negatives: only the second contributes
        let single = Matrix::from_rows(&[vec![0.4], vec![0.1]]);
        let single_y = Matrix::from_rows(&[vec![1.0], vec![0.0]]);
        assert!(
            (loss_label_surrogate(&scores, &all_pos) - loss_label_surrogate(&single, &single_y))
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn ranking_exact_cases() {
        let perfect = Matrix::from_rows(&[vec![0.9], vec![0.2], vec![0.1]]);
        let y = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]);
        assert_eq!(ranking_loss_exact(&perfect, &y).unwrap(), 0.0);

        let mixed = Matrix::from_rows(&[vec![0.9], vec![0.5], vec![0.95]]);
        assert_eq!(ranking_loss_exact(&mixed, &y).unwrap(), 0.5);

        let flat = Matrix::from_rows(&[vec![0.5], vec![0.5], vec![0.5]]);
        assert_eq!(ranking_loss_exact(&flat, &y).unwrap(), 1.0);

        let all_pos = Matrix::from_rows(&[vec![0.5], vec![0.5], vec![0.5]]);
        let y_all = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        assert!(ranking_loss_exact(&all_pos, &y_all).is_err());
    }

    fn toy_sets(n: usize, d: usize, q: usize, seed: u64) -> (MultiLabelDataset, FeatureScaler) {
        use rand::RngExt;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        let labels: Vec<Vec<u8>> = (0..n)
            .map(|i| {
                (0..q)
                    .map(|j| u8::from((i + j) % 3 == 0 || rng.random::<f64>() < 0.3))
                    .collect()
            })
            .collect();
        let ds = MultiLabelDataset::new(
            features,
            labels,
            (0..d).map(|j| format!("f{j}")).collect(),
            (0..q).map(|j| format!("L{j}")).collect(),
        )
        .unwrap();
        normalize_features(&ds)
    }

    fn small_model(d: usize, q: usize, l: usize, seed: u64) -> AemloModel {
        let settings = TrainSettings {
            hidden_dim: 16,
            latent_dim: Some(l),
            batch_size: Some(8),
            seed,
            ..TrainSettings::default()
        };
        let config = settings.resolve(8, q).unwrap();
        let scaler = FeatureScaler {
            per_feature_min: vec![0.0; d],
            per_feature_max: vec![1.0; d],
        };
        AemloModel::init(d, q, config, scaler)
    }

    #[test]
    fn forward_shapes_and_ranges() {
        let model = small_model(10, 5, 4, 11);
        let (ds, _) = toy_sets(8, 10, 5, 3);
        let xb = feature_batch(&ds, None);
        let yb = label_batch(&ds, None);
        let out = model.forward(&xb, &yb);
        assert_eq!((out.zx.rows(), out.zx.cols()), (4, 8));
        assert_eq!((out.zy.rows(), out.zy.cols()), (4, 8));
        assert_eq!((out.xrec.rows(), out.xrec.cols()), (10, 8));
        assert_eq!((out.yscores.rows(), out.yscores.cols()), (5, 8));
        assert!(out
            .yscores
            .data()
            .iter()
            .all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn forward_columns_independent() {
        let model = small_model(3, 2, 2, 5);
        let xb = Matrix::from_rows(&[vec![0.1, 0.1], vec![0.2, 0.2], vec![0.9, 0.9]]);
        let yb = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        let out = model.forward(&xb, &yb);
        for r in 0..out.xrec.rows() {
            assert_eq!(out.xrec.get(r, 0), out.xrec.get(r, 1));
        }
        for r in 0..out.yscores.rows() {
            assert_eq!(out.yscores.get(r, 0), out.yscores.get(r, 1));
        }
    }

    #[test]
    fn total_loss_reduces_to_terms() {
        let (ds, scaler) = toy_sets(8, 6, 4, 21);
        let settings = TrainSettings {
            hidden_dim: 12,
            latent_dim: Some(3),
            batch_size: Some(8),
            alpha: 0.8,
            beta: 1.7,
            ..TrainSettings::default()
        };
        let config = settings.resolve(8, 4).unwrap();
        let model = AemloModel::init(6, 4, config, scaler);
        let xb = feature_batch(&ds, None);
        let yb = label_batch(&ds, None);
        let terms = loss_terms(&model, &xb, &yb);
        let total = total_loss(&model, &xb, &yb);
        let expected = terms.embedding + 0.8 * terms.feature + 1.7 * terms.label;
        assert!((total - expected).abs() < 1e-12);

        // alpha = beta → 0 limit: embedding only (checked via the terms)
        let out = model.forward(&xb, &yb);
        let phi = loss_embedding(&out.zx, &out.zy, model.config.lambda_ortho);
        assert!((terms.embedding - phi).abs() < 1e-12);

        // doubling alpha adds exactly alpha·psi
        let mut doubled = model.clone();
        doubled.config.alpha = 1.6;
        let diff = total_loss(&doubled, &xb, &yb) - total;
        assert!((diff - 0.8 * terms.feature).abs() < 1e-10);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (ds, _) = toy_sets(8, 10, 5, 3);
        let xb = feature_batch(&ds, None);
        let yb = label_batch(&ds, None);
        let model = small_model(10, 5, 4, 17);
        let params = model.to_param_vec();
        let (_, analytic) = compute_gradients(&model, &xb, &yb);
        let loss_fn = |p: &[f64]| {
            let mut m = model.clone();
            m.set_params(p);
            total_loss(&m, &xb, &yb)
        };
        let err = grad_check(loss_fn, &params, &analytic, 1e-5);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn per_term_gradients_match_finite_differences() {
        let (ds, _) = toy_sets(8, 10, 5, 7);
        let xb = feature_batch(&ds, None);
        let yb = label_batch(&ds, None);
        let model = small_model(10, 5, 4, 23);
        let params = model.to_param_vec();
        for term in [LossTermKind::Embedding, LossTermKind::Feature, LossTermKind::Label] {
            let (_, analytic) = compute_term_gradient(&model, &xb, &yb, term);
            let loss_fn = |p: &[f64]| {
                let mut m = model.clone();
                m.set_params(p);
                let cache_terms = loss_terms(&m, &xb, &yb);
                match term {
                    LossTermKind::Embedding => cache_terms.embedding,
                    LossTermKind::Feature => cache_terms.feature,
                    LossTermKind::Label => cache_terms.label,
                }
            };
            let err = grad_check(loss_fn, &params, &analytic, 1e-5);
            assert!(err < 1e-4, "term {term:?}: max relative error {err}");
        }
    }

    #[test]
    fn threshold_search_prefers_half_on_ties() {
        assert_eq!(best_threshold(&[0.2, 0.6, 0.8], &[0, 1, 1]), 0.5);
    }

    #[test]
    fn threshold_for_all_negative_label_is_half() {
        assert_eq!(best_threshold(&[0.1, 0.9, 0.4], &[0, 0, 0]), 0.5);
    }

    #[test]
    fn threshold_never_loses_to_half() {
        let scores = [0.15, 0.35, 0.55, 0.75, 0.9, 0.2];
        let truths = [0u8, 1, 0, 1, 1, 0];
        let t = best_threshold(&scores, &truths);
        let f1 = |thr: f64| {
            let tp = scores
                .iter()
                .zip(&truths)
                .filter(|(&s, &y)| s >= thr && y == 1)
                .count();
            let fp = scores
                .iter()
                .zip(&truths)
                .filter(|(&s, &y)| s >= thr && y == 0)
                .count();
            let fn_ = truths.iter().filter(|&&y| y == 1).count() - tp;
            if 2 * tp + fp + fn_ == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
            }
        };
        assert!(f1(t) >= f1(0.5));
    }

    #[test]
    fn binarize_examples() {
        assert_eq!(binarize(&[0.7, 0.3], &[0.5, 0.5]), vec![1, 0]);
        assert_eq!(binarize(&[0.5, 0.5], &[0.5, 0.5]), vec![1, 1]);
        assert_eq!(binarize(&[0.1, 0.2], &[0.9, 0.9]), vec![0, 0]);
    }

    #[test]
    fn training_is_deterministic() {
        let (ds, scaler) = toy_sets(32, 6, 4, 9);
        let settings = TrainSettings {
            hidden_dim: 16,
            latent_dim: Some(2),
            epochs: 3,
            seed: 3,
            ..TrainSettings::default()
        };
        let a = train(&ds, &ds, scaler.clone(), &settings).unwrap();
        let b = train(&ds, &ds, scaler, &settings).unwrap();
        assert_eq!(a.model.to_json(), b.model.to_json());
        assert_eq!(a.log, b.log);
        assert_eq!(a.log.len(), 3);
    }

    #[test]
    fn training_reports_divergence() {
        let (ds, scaler) = toy_sets(16, 4, 3, 2);
        let settings = TrainSettings {
            hidden_dim: 8,
            latent_dim: Some(2),
            epochs: 50,
            lr: 1e12,
            seed: 1,
            ..TrainSettings::default()
        };
        match train(&ds, &ds, scaler, &settings) {
            Err(TrainError::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let model = small_model(5, 3, 2, 8);
        let text = model.to_json();
        let back = AemloModel::from_json(&text).unwrap();
        assert_eq!(model, back);
    }
}
