//! Per-label binary classifiers: logistic regression trained with AdaGrad.
//!
//! Each label gets its own [`LinearModel`] over sparse feature vectors.
//! Training runs minibatch gradient descent with per-coordinate AdaGrad step
//! sizes and supports warm starts, so models can be retrained cheaply as newly
//! labeled examples arrive. All randomness (epoch shuffling, negative
//! subsampling) is driven by caller-provided seeds.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version tag written into every model checkpoint.
pub const MODEL_MAGIC: &str = "ACTLOGIC-MODEL-1";

/// AdaGrad denominator offset.
const ADAGRAD_DELTA: f64 = 1e-8;

/// Predicted probabilities are clamped to `[PROBA_CLAMP, 1 - PROBA_CLAMP]`.
pub const PROBA_CLAMP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("feature index {index} out of range for dimension {dim}")]
    DimensionMismatch { index: u32, dim: usize },
    #[error("sparse vector entries must have strictly increasing indices and finite values")]
    MalformedVector,
    #[error("non-finite loss or gradient at optimizer step {step}")]
    NonFiniteGradient { step: u64 },
    #[error("cannot train on an empty example set")]
    EmptyData,
    #[error("model checkpoint error: {0}")]
    Checkpoint(String),
}

// ---------------------------------------------------------------------------
// Sparse vectors
// ---------------------------------------------------------------------------

/// A sparse feature vector: (index, value) entries with strictly increasing
/// indices and finite values. Absent indices are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self, LearnerError> {
        for (i, &(idx, val)) in entries.iter().enumerate() {
            if !val.is_finite() {
                return Err(LearnerError::MalformedVector);
            }
            if i > 0 && entries[i - 1].0 >= idx {
                return Err(LearnerError::MalformedVector);
            }
        }
        Ok(SparseVector { entries })
    }

    pub fn empty() -> Self {
        SparseVector { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Largest index present, if any. Entries are sorted, so it is the last.
    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| dense[i as usize] * v)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Binary logistic regression with AdaGrad state, for one label.
#[derive(Clone, Debug)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
    accum: Vec<f64>,
    bias_accum: f64,
    steps_taken: u64,
}

impl LinearModel {
    pub fn new(dim: usize) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            accum: vec![0.0; dim],
            bias_accum: 0.0,
            steps_taken: 0,
        }
    }

    /// Reassembles a model from checkpointed state.
    pub fn from_parts(
        weights: Vec<f64>,
        bias: f64,
        accum: Vec<f64>,
        bias_accum: f64,
        steps_taken: u64,
    ) -> Result<Self, LearnerError> {
        if weights.len() != accum.len() {
            return Err(LearnerError::Checkpoint(format!(
                "weight/accumulator length mismatch: {} vs {}",
                weights.len(),
                accum.len()
            )));
        }
        Ok(LinearModel { weights, bias, accum, bias_accum, steps_taken })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.accum
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    /// `sigmoid(w . x + b)`, clamped to `[PROBA_CLAMP, 1 - PROBA_CLAMP]` so
    /// downstream logarithms stay finite.
    pub fn predict_proba(&self, x: &SparseVector) -> Result<f64, LearnerError> {
        if let Some(max) = x.max_index() {
            if max as usize >= self.dim() {
                return Err(LearnerError::DimensionMismatch { index: max, dim: self.dim() });
            }
        }
        let z = x.dot(&self.weights) + self.bias;
        Ok(sigmoid(z).clamp(PROBA_CLAMP, 1.0 - PROBA_CLAMP))
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 100,
            learning_rate: 0.1,
            l2: 1e-4,
            epochs: 10,
            seed: 0,
        }
    }
}

/// Per-epoch mean training loss, measured before each batch update.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Mean logistic loss of a batch plus the L2 penalty `l2/2 * |w|^2`.
/// The bias is not regularized.
pub fn logistic_batch_loss(
    weights: &[f64],
    bias: f64,
    batch: &[(&SparseVector, bool)],
    l2: f64,
) -> f64 {
    let mut total = 0.0;
    for &(x, y) in batch {
        let z = x.dot(weights) + bias;
        total += softplus(z) - if y { z } else { 0.0 };
    }
    let penalty = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    total / batch.len() as f64 + penalty
}

/// Gradient of [`logistic_batch_loss`] with respect to weights and bias.
pub fn logistic_batch_gradient(
    weights: &[f64],
    bias: f64,
    batch: &[(&SparseVector, bool)],
    l2: f64,
) -> (Vec<f64>, f64) {
    let mut grad: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut bias_grad = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for &(x, y) in batch {
        let z = x.dot(weights) + bias;
        let residual = (sigmoid(z) - if y { 1.0 } else { 0.0 }) * scale;
        for &(i, v) in x.entries() {
            grad[i as usize] += residual * v;
        }
        bias_grad += residual;
    }
    (grad, bias_grad)
}

/// Trains `model` in place with minibatch AdaGrad. A fresh model starts cold;
/// passing a previously trained model warm-starts from its weights and
/// accumulated step-size state. Examples are reshuffled each epoch from
/// `cfg.seed`, so identical inputs give bitwise-identical models.
pub fn train(
    model: &mut LinearModel,
    data: &[(&SparseVector, bool)],
    cfg: &TrainConfig,
) -> Result<TrainReport, LearnerError> {
    if data.is_empty() {
        return Err(LearnerError::EmptyData);
    }
    assert!(cfg.batch_size > 0, "batch size must be positive");
    for &(x, _) in data {
        if let Some(max) = x.max_index() {
            if max as usize >= model.dim() {
                return Err(LearnerError::DimensionMismatch { index: max, dim: model.dim() });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&SparseVector, bool)> = chunk.iter().map(|&i| data[i]).collect();
            let loss = logistic_batch_loss(&model.weights, model.bias, &batch, cfg.l2);
            let (grad, bias_grad) =
                logistic_batch_gradient(&model.weights, model.bias, &batch, cfg.l2);
            model.steps_taken += 1;
            if !loss.is_finite()
                || !bias_grad.is_finite()
                || grad.iter().any(|g| !g.is_finite())
            {
                return Err(LearnerError::NonFiniteGradient { step: model.steps_taken });
            }
            for j in 0..model.weights.len() {
                let g = grad[j];
                model.accum[j] += g * g;
                model.weights[j] -= cfg.learning_rate * g / (model.accum[j].sqrt() + ADAGRAD_DELTA);
            }
            model.bias_accum += bias_grad * bias_grad;
            model.bias -=
                cfg.learning_rate * bias_grad / (model.bias_accum.sqrt() + ADAGRAD_DELTA);
            loss_sum += loss;
            batches += 1;
        }
        epoch_losses.push(loss_sum / batches as f64);
    }
    Ok(TrainReport { epoch_losses })
}

/// All positives plus `min(|positives|, |pool|)` distinct negatives drawn
/// without replacement from `pool`, in a deterministic order given `rng`.
pub fn subsample_negatives<T: Clone>(
    positives: &[T],
    pool: &[T],
    rng: &mut impl Rng,
) -> Vec<T> {
    let take = positives.len().min(pool.len());
    let mut picked = rand::seq::index::sample(rng, pool.len(), take).into_vec();
    picked.sort_unstable();
    let mut out = positives.to_vec();
    out.extend(picked.into_iter().map(|i| pool[i].clone()));
    out
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    magic: String,
    models: Vec<CheckpointModel>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointModel {
    dimension: usize,
    weights: Vec<(u32, f64)>,
    bias: f64,
    accumulator: Vec<(u32, f64)>,
    bias_accumulator: f64,
    steps_taken: u64,
}

fn to_sparse(dense: &[f64]) -> Vec<(u32, f64)> {
    dense
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v != 0.0)
        .map(|(i, &v)| (i as u32, v))
        .collect()
}

fn to_dense(sparse: &[(u32, f64)], dim: usize) -> Result<Vec<f64>, LearnerError> {
    let mut out = vec![0.0; dim];
    for &(i, v) in sparse {
        if i as usize >= dim {
            return Err(LearnerError::Checkpoint(format!(
                "entry index {i} outside dimension {dim}"
            )));
        }
        out[i as usize] = v;
    }
    Ok(out)
}

/// Writes all per-label models to one JSON checkpoint tagged [`MODEL_MAGIC`].
pub fn save_models(path: &Path, models: &[LinearModel]) -> Result<(), LearnerError> {
    let file = CheckpointFile {
        magic: MODEL_MAGIC.to_string(),
        models: models
            .iter()
            .map(|m| CheckpointModel {
                dimension: m.dim(),
                weights: to_sparse(&m.weights),
                bias: m.bias,
                accumulator: to_sparse(&m.accum),
                bias_accumulator: m.bias_accum,
                steps_taken: m.steps_taken,
            })
            .collect(),
    };
    let text = serde_json::to_string(&file)
        .map_err(|e| LearnerError::Checkpoint(format!("serialize: {e}")))?;
    fs::write(path, text).map_err(|e| LearnerError::Checkpoint(format!("write: {e}")))
}

pub fn load_models(path: &Path) -> Result<Vec<LinearModel>, LearnerError> {
    let text =
        fs::read_to_string(path).map_err(|e| LearnerError::Checkpoint(format!("read: {e}")))?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| LearnerError::Checkpoint(format!("parse: {e}")))?;
    if file.magic != MODEL_MAGIC {
        return Err(LearnerError::Checkpoint(format!(
            "magic `{}` does not match `{MODEL_MAGIC}`",
            file.magic
        )));
    }
    file.models
        .into_iter()
        .map(|m| {
            LinearModel::from_parts(
                to_dense(&m.weights, m.dimension)?,
                m.bias,
                to_dense(&m.accumulator, m.dimension)?,
                m.bias_accumulator,
                m.steps_taken,
            )
        })
        .collect()
}
