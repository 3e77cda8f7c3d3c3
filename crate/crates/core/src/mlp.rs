//! Minimal feedforward regression network: seeded initialization,
//! exact backpropagation, mini-batch gradient descent.
//!
//! Parameters are exposed as one flat vector (layer by layer, weights
//! row-major then biases) so gradients can be checked against finite
//! differences and models can be snapshotted.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::topology::NetworkTopology;

/// Errors from model construction, evaluation, and training.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    /// A dimension was zero where a positive value is required.
    #[error("invalid dimension: {0}")]
    InvalidDimension(&'static str),
    /// Input length does not match what the model expects.
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch {
        /// Expected length.
        expected: usize,
        /// Actual length.
        got: usize,
    },
    /// A training hyperparameter violated its range.
    #[error("invalid train config: {0}")]
    InvalidConfig(&'static str),
    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    Empty(&'static str),
    /// Paired inputs differ in length.
    #[error("length mismatch: {left} predictions vs {right} targets")]
    LengthMismatch {
        /// Prediction count.
        left: usize,
        /// Target count.
        right: usize,
    },
    /// A loss or gradient stopped being a number.
    #[error("non-finite value encountered during {context}")]
    NonFinite {
        /// What was being computed.
        context: &'static str,
    },
    /// Training produced a non-finite loss or parameters.
    #[error("training diverged during epoch {epoch}")]
    Diverged {
        /// Zero-based epoch in which divergence was detected.
        epoch: usize,
    },
    /// Scalar-target training requires a single output.
    #[error("scalar training requires output_dim 1, model has {output_dim}")]
    UnsupportedOutputDim {
        /// The model's output width.
        output_dim: usize,
    },
}

/// Hidden-layer activation function. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    /// max(0, x).
    #[default]
    Relu,
    /// Hyperbolic tangent.
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the post-activation value; both
    /// supported activations admit this form.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightInit {
    /// Uniform in [−s, s] with s = sqrt(6 / (fan_in + fan_out)).
    #[default]
    GlorotUniform,
}

/// Mini-batch gradient descent hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Step size, > 0.
    pub learning_rate: f64,
    /// Full passes over the training set, ≥ 1.
    pub epochs: usize,
    /// Rows per gradient step, ≥ 1; values above the set size mean
    /// full-batch descent.
    pub batch_size: usize,
    /// Seed for the per-epoch shuffle.
    pub seed: u64,
    /// Weight initialization scheme used when building the model.
    pub init: WeightInit,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 20,
            batch_size: 64,
            seed: 0,
            init: WeightInit::default(),
        }
    }
}

impl TrainConfig {
    /// Checks every field range.
    pub fn validate(&self) -> Result<(), MlpError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(MlpError::InvalidConfig("learning_rate must be positive"));
        }
        if self.epochs < 1 {
            return Err(MlpError::InvalidConfig("epochs must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(MlpError::InvalidConfig("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// One affine layer; `weights` is in_dim × out_dim, row-major by input.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    weights: Vec<f64>,
    biases: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
}

impl Layer {
    fn init(in_dim: usize, out_dim: usize, init: WeightInit, rng: &mut ChaCha8Rng) -> Self {
        let scale = match init {
            WeightInit::GlorotUniform => libm::sqrt(6.0 / (in_dim + out_dim) as f64),
        };
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-scale..=scale))
            .collect();
        Self {
            weights,
            biases: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    /// input is rows × in_dim flat; returns rows × out_dim pre-activations.
    fn affine(&self, input: &[f64], rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows * self.out_dim];
        for b in 0..rows {
            let in_row = &input[b * self.in_dim..(b + 1) * self.in_dim];
            let out_row = &mut out[b * self.out_dim..(b + 1) * self.out_dim];
            out_row.copy_from_slice(&self.biases);
            for (i, &x) in in_row.iter().enumerate() {
                let w_row = &self.weights[i * self.out_dim..(i + 1) * self.out_dim];
                for (o, w) in out_row.iter_mut().zip(w_row) {
                    *o += x * w;
                }
            }
        }
        out
    }
}

/// Feedforward network with uniform hidden width and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPModel {
    layers: Vec<Layer>,
    activation: Activation,
    input_dim: usize,
    output_dim: usize,
}

impl MLPModel {
    /// Builds a network for `topology`: `num_hidden_layers` hidden
    /// layers of `neurons_per_layer` each, then a linear output layer.
    /// Weights are drawn deterministically from `seed`; biases start
    /// at zero.
    pub fn build(
        topology: &NetworkTopology,
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        init: WeightInit,
        seed: u64,
    ) -> Result<Self, MlpError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(MlpError::InvalidDimension(
                "input_dim and output_dim must be positive",
            ));
        }
        if topology.num_hidden_layers == 0 || topology.neurons_per_layer == 0 {
            return Err(MlpError::InvalidDimension(
                "topology must have at least one hidden layer and neuron",
            ));
        }
        let hidden = topology.neurons_per_layer as usize;
        let mut dims = Vec::with_capacity(topology.num_hidden_layers as usize + 2);
        dims.push(input_dim);
        for _ in 0..topology.num_hidden_layers {
            dims.push(hidden);
        }
        dims.push(output_dim);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|pair| Layer::init(pair[0], pair[1], init, &mut rng))
            .collect();
        Ok(Self {
            layers,
            activation,
            input_dim,
            output_dim,
        })
    }

    /// Expected feature length.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Output vector length.
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Hidden-layer activation.
    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// (in_dim, out_dim) of each layer in forward order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.in_dim, l.out_dim)).collect()
    }

    /// Total number of weights and biases.
    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// All parameters as one vector: per layer, weights row-major then
    /// biases. Gradients use the same order.
    pub fn flatten_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    /// Overwrites all parameters from a flat vector in
    /// [`MLPModel::flatten_parameters`] order.
    pub fn assign_parameters(&mut self, params: &[f64]) -> Result<(), MlpError> {
        if params.len() != self.parameter_count() {
            return Err(MlpError::DimensionMismatch {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let w_len = layer.weights.len();
            layer
                .weights
                .copy_from_slice(&params[offset..offset + w_len]);
            offset += w_len;
            let b_len = layer.biases.len();
            layer
                .biases
                .copy_from_slice(&params[offset..offset + b_len]);
            offset += b_len;
        }
        Ok(())
    }

    /// Forward pass for one feature row.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>, MlpError> {
        if features.len() != self.input_dim {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_dim,
                got: features.len(),
            });
        }
        let acts = self.activations(features, 1);
        Ok(acts.into_iter().next_back().unwrap())
    }

    /// Forward pass projected to the first output component.
    pub fn predict(&self, features: &[f64]) -> Result<f64, MlpError> {
        Ok(self.forward(features)?[0])
    }

    /// First output component for every row, computed as one batch.
    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, MlpError> {
        let flat = self.flatten_rows(rows)?;
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let acts = self.activations(&flat, rows.len());
        let output = &acts[acts.len() - 1];
        Ok((0..rows.len())
            .map(|b| output[b * self.output_dim])
            .collect())
    }

    /// Exact gradient of the mean squared error over a scalar-target
    /// batch, flattened in parameter order.
    pub fn gradient(&self, features: &[Vec<f64>], targets: &[f64]) -> Result<Vec<f64>, MlpError> {
        self.check_training_inputs(features, targets)?;
        let flat = self.flatten_rows(features)?;
        let (grads, loss) = self.batch_gradient(&flat, features.len(), targets);
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(MlpError::NonFinite {
                context: "gradient computation",
            });
        }
        Ok(grads)
    }

    /// Mini-batch gradient descent with a seeded per-epoch shuffle.
    /// Returns the mean pre-update minibatch loss of each epoch.
    pub fn train(
        &mut self,
        features: &[Vec<f64>],
        targets: &[f64],
        config: &TrainConfig,
    ) -> Result<Vec<f64>, MlpError> {
        config.validate()?;
        self.check_training_inputs(features, targets)?;

        let n = features.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut history = Vec::with_capacity(config.epochs);
        let cap = config.batch_size.min(n);
        let mut batch_x = Vec::with_capacity(cap * self.input_dim);
        let mut batch_y = Vec::with_capacity(cap);

        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            let mut batches = 0usize;
            for chunk in order.chunks(config.batch_size) {
                batch_x.clear();
                batch_y.clear();
                for &row in chunk {
                    batch_x.extend_from_slice(&features[row]);
                    batch_y.push(targets[row]);
                }
                let (grads, batch_loss) = self.batch_gradient(&batch_x, chunk.len(), &batch_y);
                if !batch_loss.is_finite() {
                    return Err(MlpError::Diverged { epoch });
                }
                self.apply_update(&grads, config.learning_rate);
                epoch_loss += batch_loss;
                batches += 1;
            }
            history.push(epoch_loss / batches as f64);
        }
        let finite = self
            .layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|p| p.is_finite()));
        if !finite {
            return Err(MlpError::Diverged {
                epoch: config.epochs - 1,
            });
        }
        Ok(history)
    }

    /// Post-activation values of every layer for a rows × input_dim
    /// flat batch; the last entry is the linear output.
    fn activations(&self, input: &[f64], rows: usize) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let src: &[f64] = if idx == 0 { input } else { &acts[idx - 1] };
            let mut z = layer.affine(src, rows);
            if idx + 1 < self.layers.len() {
                for v in z.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Backpropagation over a flat batch with scalar targets. Returns
    /// (flat gradients, batch MSE). Callers check finiteness.
    fn batch_gradient(&self, x: &[f64], rows: usize, targets: &[f64]) -> (Vec<f64>, f64) {
        let acts = self.activations(x, rows);
        let last = self.layers.len() - 1;
        let preds = &acts[last];

        let mut loss_sum = 0.0;
        let mut delta = vec![0.0; rows];
        for b in 0..rows {
            let err = preds[b] - targets[b];
            loss_sum += err * err;
            delta[b] = 2.0 * err / rows as f64;
        }
        let loss = loss_sum / rows as f64;

        // Per-layer (weight, bias) gradients assembled back to front.
        let mut reversed: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input_act: &[f64] = if l == 0 { x } else { &acts[l - 1] };

            let mut dw = vec![0.0; layer.in_dim * layer.out_dim];
            let mut db = vec![0.0; layer.out_dim];
            for b in 0..rows {
                let in_row = &input_act[b * layer.in_dim..(b + 1) * layer.in_dim];
                let d_row = &delta[b * layer.out_dim..(b + 1) * layer.out_dim];
                for (bias, d) in db.iter_mut().zip(d_row) {
                    *bias += d;
                }
                for (i, &a) in in_row.iter().enumerate() {
                    let dst = &mut dw[i * layer.out_dim..(i + 1) * layer.out_dim];
                    for (g, d) in dst.iter_mut().zip(d_row) {
                        *g += a * d;
                    }
                }
            }

            if l > 0 {
                let prev_dim = layer.in_dim;
                let prev_act = &acts[l - 1];
                let mut prev = vec![0.0; rows * prev_dim];
                for b in 0..rows {
                    let d_row = &delta[b * layer.out_dim..(b + 1) * layer.out_dim];
                    let p_row = &mut prev[b * prev_dim..(b + 1) * prev_dim];
                    for (i, p) in p_row.iter_mut().enumerate() {
                        let w_row = &layer.weights[i * layer.out_dim..(i + 1) * layer.out_dim];
                        let mut acc = 0.0;
                        for (w, d) in w_row.iter().zip(d_row) {
                            acc += w * d;
                        }
                        *p = acc
                            * self
                                .activation
                                .derivative_from_output(prev_act[b * prev_dim + i]);
                    }
                }
                delta = prev;
            }
            reversed.push((dw, db));
        }

        let mut flat = Vec::with_capacity(self.parameter_count());
        for (dw, db) in reversed.into_iter().rev() {
            flat.extend_from_slice(&dw);
            flat.extend_from_slice(&db);
        }
        (flat, loss)
    }

    fn apply_update(&mut self, grads: &[f64], learning_rate: f64) {
        let mut offset = 0;
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut() {
                *w -= learning_rate * grads[offset];
                offset += 1;
            }
            for b in layer.biases.iter_mut() {
                *b -= learning_rate * grads[offset];
                offset += 1;
            }
        }
    }

    fn check_training_inputs(
        &self,
        features: &[Vec<f64>],
        targets: &[f64],
    ) -> Result<(), MlpError> {
        if self.output_dim != 1 {
            return Err(MlpError::UnsupportedOutputDim {
                output_dim: self.output_dim,
            });
        }
        if features.is_empty() {
            return Err(MlpError::Empty("training set"));
        }
        if features.len() != targets.len() {
            return Err(MlpError::LengthMismatch {
                left: features.len(),
                right: targets.len(),
            });
        }
        Ok(())
    }

    fn flatten_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, MlpError> {
        let mut flat = Vec::with_capacity(rows.len() * self.input_dim);
        for row in rows {
            if row.len() != self.input_dim {
                return Err(MlpError::DimensionMismatch {
                    expected: self.input_dim,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Ok(flat)
    }
}

/// Mean squared error over paired scalar sequences.
pub fn loss(predictions: &[f64], targets: &[f64]) -> Result<f64, MlpError> {
    if predictions.is_empty() {
        return Err(MlpError::Empty("loss inputs"));
    }
    if predictions.len() != targets.len() {
        return Err(MlpError::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}
