//! Dense-network substrate: matrices, layers, activations, Adam, and a
//! finite-difference gradient checker. Everything runs in f64 so gradient
//! checks can be tight.

use rand::RngExt;
use serde::{Deserialize, Serialize};

/// Row-major f64 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows in Matrix::from_rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// self (m×k) · rhs (k×n).
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul dimension mismatch: {}x{} . {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self (m×k) · rhsᵀ where rhs is (n×k); result m×n.
    pub fn matmul_rhs_transposed(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.cols,
            "matmul_rhs_transposed dimension mismatch: {}x{} . ({}x{})ᵀ",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..rhs.rows {
                let b_row = rhs.row(j);
                let mut acc = 0.0;
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc += a * b;
                }
                out.data[i * rhs.rows + j] = acc;
            }
        }
        out
    }

    /// selfᵀ · rhs where self is (k×m) and rhs is (k×n); result m×n.
    pub fn transposed_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.rows, rhs.rows,
            "transposed_matmul dimension mismatch: ({}x{})ᵀ . {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = rhs.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transposed(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Matrix, scale: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }

    /// Sum of elementwise products, i.e. Tr(selfᵀ · other).
    pub fn frobenius_dot(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

/// Derivative of leaky ReLU; defined as 1 at exactly 0.
pub fn leaky_relu_deriv(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        slope
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn sigmoid_deriv(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

// ---------------------------------------------------------------------------
// Dense layer
// ---------------------------------------------------------------------------

/// Affine layer: output = W·input + b broadcast per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// out×in weight matrix.
    pub weights: Matrix,
    /// Per-output bias, length out.
    pub bias: Vec<f64>,
}

impl DenseLayer {
    /// Glorot-uniform weights with bound √(6/(in+out)); zero biases.
    pub fn glorot(input_dim: usize, output_dim: usize, rng: &mut impl RngExt) -> Self {
        assert!(input_dim > 0 && output_dim > 0, "layer dims must be positive");
        let bound = (6.0 / (input_dim + output_dim) as f64).sqrt();
        let weights = Matrix {
            rows: output_dim,
            cols: input_dim,
            data: (0..output_dim * input_dim)
                .map(|_| rng.random_range(-bound..bound))
                .collect(),
        };
        DenseLayer {
            weights,
            bias: vec![0.0; output_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    /// input is in×batch; output is out×batch.
    pub fn forward(&self, input: &Matrix) -> Matrix {
        assert_eq!(
            input.rows(),
            self.input_dim(),
            "dense_forward: input has {} rows, layer expects {}",
            input.rows(),
            self.input_dim()
        );
        let mut out = self.weights.matmul(input);
        for r in 0..out.rows() {
            let b = self.bias[r];
            for v in out.row_mut(r) {
                *v += b;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam accumulators over a flat parameter vector. Each `step` consumes one
/// gradient and advances the step counter exactly once.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    cfg: AdamConfig,
}

impl AdamState {
    pub fn new(param_len: usize, cfg: AdamConfig) -> Self {
        assert!((0.0..1.0).contains(&cfg.beta1) && (0.0..1.0).contains(&cfg.beta2));
        AdamState {
            m: vec![0.0; param_len],
            v: vec![0.0; param_len],
            t: 0,
            cfg,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Standard Adam update with bias correction.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "adam_step: parameter shape mismatch");
        assert_eq!(grads.len(), self.m.len(), "adam_step: gradient shape mismatch");
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.cfg.beta1.powi(t);
        let bc2 = 1.0 - self.cfg.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.cfg.beta1 * self.m[i] + (1.0 - self.cfg.beta1) * g;
            self.v[i] = self.cfg.beta2 * self.v[i] + (1.0 - self.cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

/// Compare an analytic gradient against central finite differences of
/// `loss_fn`. Returns the max relative error over all parameter entries,
/// with relErr = |num−ana| / max(1e-8, |num|+|ana|).
///
/// Panics if the loss is non-finite at any probe point.
pub fn grad_check(
    loss_fn: impl Fn(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    epsilon: f64,
) -> f64 {
    assert_eq!(params.len(), analytic.len());
    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..probe.len() {
        let original = probe[i];
        probe[i] = original + epsilon;
        let plus = loss_fn(&probe);
        probe[i] = original - epsilon;
        let minus = loss_fn(&probe);
        probe[i] = original;
        assert!(
            plus.is_finite() && minus.is_finite(),
            "grad_check: non-finite loss at parameter {i}"
        );
        let numeric = (plus - minus) / (2.0 * epsilon);
        let rel = (numeric - analytic[i]).abs() / (numeric.abs() + analytic[i].abs()).max(1e-8);
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_forward_identity() {
        let layer = DenseLayer {
            weights: Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            bias: vec![0.0, 0.0],
        };
        let input = Matrix::from_rows(&[vec![3.0], vec![4.0]]);
        let out = layer.forward(&input);
        assert_eq!(out, input);
    }

    #[test]
    fn dense_forward_scalar_affine() {
        let layer = DenseLayer {
            weights: Matrix::from_rows(&[vec![2.0]]),
            bias: vec![1.0],
        };
        let out = layer.forward(&Matrix::from_rows(&[vec![5.0]]));
        assert_eq!(out.get(0, 0), 11.0);
    }

    #[test]
    fn dense_forward_columns_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let layer = DenseLayer::glorot(3, 2, &mut rng);
        let input = Matrix::from_rows(&[vec![0.3, 0.3], vec![-1.0, -1.0], vec![2.5, 2.5]]);
        let out = layer.forward(&input);
        for r in 0..out.rows() {
            assert_eq!(out.get(r, 0), out.get(r, 1));
        }
    }

    #[test]
    #[should_panic(expected = "dense_forward")]
    fn dense_forward_dimension_mismatch() {
        let layer = DenseLayer {
            weights: Matrix::from_rows(&[vec![1.0, 2.0]]),
            bias: vec![0.0],
        };
        layer.forward(&Matrix::from_rows(&[vec![1.0]]));
    }

    #[test]
    fn activation_values() {
        assert!((leaky_relu(-2.0, 0.01) + 0.02).abs() < 1e-15);
        assert_eq!(leaky_relu(3.0, 0.01), 3.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(leaky_relu_deriv(0.0, 0.01), 1.0);
    }

    #[test]
    fn activation_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &x in &[-1.0, 0.5, 3.0] {
            let num = (leaky_relu(x + h, 0.01) - leaky_relu(x - h, 0.01)) / (2.0 * h);
            assert!((num - leaky_relu_deriv(x, 0.01)).abs() < 1e-6, "leaky relu at {x}");
            let num = (sigmoid(x + h) - sigmoid(x - h)) / (2.0 * h);
            assert!((num - sigmoid_deriv(x)).abs() < 1e-6, "sigmoid at {x}");
        }
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let mut params = vec![0.7, -0.2, 1.5];
        let mut state = AdamState::new(3, AdamConfig::default());
        state.step(&mut params, &[0.0, 0.0, 0.0]);
        assert_eq!(params, vec![0.7, -0.2, 1.5]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // Bias correction cancels the decay on the first step, so the move
        // is lr·g/(|g|+ε) ≈ lr for g=1.
        let mut params = vec![0.0];
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(1, cfg);
        state.step(&mut params, &[1.0]);
        assert!((params[0].abs() - 0.1).abs() < 1e-9, "got {}", params[0]);
    }

    #[test]
    fn adam_state_advances_once_per_step() {
        let mut params = vec![1.0];
        let mut state = AdamState::new(1, AdamConfig::default());
        state.step(&mut params, &[0.5]);
        let after_one = (params[0], state.step_count());
        state.step(&mut params, &[0.5]);
        assert_eq!(state.step_count(), 2);
        assert_ne!(after_one.0, params[0]);
        assert_eq!(after_one.1, 1);
    }

    #[test]
    fn grad_check_quadratic() {
        let params = vec![0.3, -1.2, 2.0];
        let loss = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
        let analytic: Vec<f64> = params.iter().map(|v| 2.0 * v).collect();
        let err = grad_check(loss, &params, &analytic, 1e-5);
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn grad_check_detects_corrupted_gradient() {
        let params = vec![0.9, -0.4];
        let loss = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
        let corrupted: Vec<f64> = params.iter().map(|v| 4.0 * v).collect();
        let err = grad_check(loss, &params, &corrupted, 1e-5);
        // |2g−g|/(|2g|+|g|) = 1/3
        assert!((err - 1.0 / 3.0).abs() < 1e-6, "relative error {err}");
    }

    #[test]
    fn glorot_is_seeded_bounded_and_zero_biased() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let la = DenseLayer::glorot(8, 4, &mut a);
        let lb = DenseLayer::glorot(8, 4, &mut b);
        assert_eq!(la, lb);
        let bound = (6.0 / 12.0f64).sqrt();
        assert!(la.weights.data().iter().all(|w| w.abs() <= bound));
        assert!(la.bias.iter().all(|&b| b == 0.0));
    }
}
