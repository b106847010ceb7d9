//! Training: MSE loss, Adam with bias correction, plateau-triggered learning
//! rate decay, and early stopping on the validation loss.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::mix_seed;
use crate::graph::NodeMask;
use crate::model::{
    forward, loss_and_gradients, ModelConfig, ModelParameters, ParamLayout, FEATURE_DIM,
};
use crate::oracle::TrainingSample;
use crate::parallel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("training dataset is empty (after dropping degenerate samples)")]
    EmptyDataset,
    #[error("prediction and label lengths differ: {labels} labels vs {predictions} predictions")]
    LengthMismatch { labels: usize, predictions: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    /// Multiplier applied to the learning rate after a validation plateau.
    pub lr_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many consecutive epochs without validation improvement.
    pub patience: usize,
    /// Decay the learning rate after this many consecutive epochs without
    /// validation improvement.
    pub plateau_window: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            l2_penalty: 1e-4,
            lr_decay: 0.4,
            batch_size: 6,
            max_epochs: 50,
            patience: 8,
            plateau_window: 4,
            validation_fraction: 0.05,
            seed: 0,
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Mean squared error `(1/n) * sum (c_i - s_i)^2`.
pub fn mse(labels: &[f64], predictions: &[f64]) -> Result<f64, TrainError> {
    if labels.len() != predictions.len() {
        return Err(TrainError::LengthMismatch {
            labels: labels.len(),
            predictions: predictions.len(),
        });
    }
    let n = labels.len().max(1);
    Ok(labels
        .iter()
        .zip(predictions)
        .map(|(c, s)| (c - s) * (c - s))
        .sum::<f64>()
        / n as f64)
}

/// Per-sample gradient of `MSE + l2 * sum(theta^2)` for the dropout
/// realization drawn from `dropout_seed` (disabled when None). Returns the
/// data loss alongside the flat gradient.
pub fn gradients(
    sample: &TrainingSample,
    params: &ModelParameters,
    l2: f64,
    dropout_seed: Option<u64>,
) -> (f64, Vec<f64>) {
    let mask = NodeMask::all_alive(sample.graph.node_count());
    loss_and_gradients(&sample.graph, &mask, &sample.labels, params, l2, dropout_seed)
}

/// Adam moments plus the current (decayable) learning rate.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub learning_rate: f64,
}

impl AdamState {
    pub fn new(param_count: usize, learning_rate: f64) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
            learning_rate,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update at the state's current learning rate.
pub fn adam_step(state: &mut AdamState, params: &mut ModelParameters, grads: &[f64]) {
    assert_eq!(grads.len(), state.m.len());
    assert_eq!(grads.len(), params.values().len());
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);
    let lr = state.learning_rate;
    let theta = params.values_mut();
    for k in 0..grads.len() {
        state.m[k] = ADAM_BETA1 * state.m[k] + (1.0 - ADAM_BETA1) * grads[k];
        state.v[k] = ADAM_BETA2 * state.v[k] + (1.0 - ADAM_BETA2) * grads[k] * grads[k];
        let m_hat = state.m[k] / bias1;
        let v_hat = state.v[k] / bias2;
        theta[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
}

/// Uniform initialization on `[-sqrt(1/fan_in), +sqrt(1/fan_in)]` per tensor,
/// deterministic given the seed.
///
/// The output stage of the feature scorer (`w1b`, `b1b`) draws from the
/// nonnegative half `[0, sqrt(1/fan_in)]` instead: node features are
/// nonnegative and strongly correlated across nodes, so a symmetric draw
/// lands the scorer's final ReLU on the dead side for every node at once
/// about half the time, freezing the whole network at its degree-only
/// fallback with exactly zero gradients.
pub fn init_parameters(cfg: &ModelConfig, seed: u64) -> ModelParameters {
    let layout = ParamLayout::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; layout.total()];
    for tensor in layout.tensors() {
        let fan_in = tensor_fan_in(cfg, &tensor.name);
        // ReLU-gain-corrected bound for the deeper attention transforms; a
        // plain 1/sqrt(fan_in) bound decays embedding variance ~6x per layer
        // and starves the dot-product local score after three layers. The
        // scalar-input first layer keeps the plain bound, which already
        // leaves its output at the input's scale.
        let gain = if tensor.name.starts_with("w2_") && fan_in >= 2 { 6.0 } else { 0.04 };
        let bound = (gain / fan_in as f64).sqrt();
        let nonnegative = tensor.name == "w1b" || tensor.name == "b1b";
        for value in &mut data[tensor.offset..tensor.offset + tensor.len] {
            *value = if nonnegative {
                bound * rng.random::<f64>()
            } else {
                bound * (2.0 * rng.random::<f64>() - 1.0)
            };
        }
    }
    ModelParameters::from_values(cfg.clone(), data).expect("layout-sized buffer")
}

fn tensor_fan_in(cfg: &ModelConfig, name: &str) -> usize {
    if name == "w1a" || name == "b1a" {
        return FEATURE_DIM;
    }
    if name == "w1b" || name == "b1b" {
        return cfg.scorer_hidden;
    }
    if name == "p" {
        return cfg.final_dim();
    }
    let layer: usize = name
        .split("_l")
        .nth(1)
        .and_then(|rest| rest.split("_h").next())
        .and_then(|l| l.parse().ok())
        .expect("layer-tagged tensor name");
    if name.starts_with("a_") {
        2 * cfg.head_dim(layer)
    } else {
        cfg.layer_input_dim(layer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation loss seen.
    pub params: ModelParameters,
    pub history: Vec<EpochStats>,
    /// Validation loss of the freshly initialized model.
    pub initial_val_loss: f64,
    pub best_val_loss: f64,
}

/// Trains on a deterministic 95/5 split: shuffled minibatches, per-batch mean
/// gradients, Adam updates, learning rate decayed by `lr_decay` after
/// `plateau_window` stale epochs, early stop after `patience` stale epochs.
pub fn train(
    dataset: &[TrainingSample],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    let usable: Vec<&TrainingSample> = dataset.iter().filter(|s| !s.is_degenerate()).collect();
    if usable.is_empty() {
        return Err(TrainError::EmptyDataset);
    }

    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x5EED_5711));
    order.shuffle(&mut split_rng);
    let val_count = ((usable.len() as f64 * cfg.validation_fraction).round() as usize)
        .clamp(1, usable.len().saturating_sub(1).max(1));
    let (val_idx, train_idx) = order.split_at(val_count);
    if train_idx.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let val_set: Vec<&TrainingSample> = val_idx.iter().map(|&i| usable[i]).collect();
    let train_set: Vec<&TrainingSample> = train_idx.iter().map(|&i| usable[i]).collect();

    let mut params = init_parameters(model_cfg, mix_seed(cfg.seed, 0x1217));
    let mut adam = AdamState::new(params.values().len(), cfg.learning_rate);

    let initial_val_loss = validation_loss(&val_set, &params);
    let mut best_val_loss = initial_val_loss;
    let mut best_params = params.clone();
    let mut stale_epochs = 0usize;
    let mut history = Vec::new();

    let batch_size = cfg.batch_size.max(1);
    for epoch in 0..cfg.max_epochs {
        let lr_in_effect = adam.learning_rate;
        let mut epoch_order: Vec<usize> = (0..train_set.len()).collect();
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0xE0000 + epoch as u64));
        epoch_order.shuffle(&mut epoch_rng);

        let mut loss_sum = 0.0;
        for (batch_no, batch) in epoch_order.chunks(batch_size).enumerate() {
            let snapshot = &params;
            let results: Vec<(f64, Vec<f64>)> = parallel::map_slice(batch, |&sample_idx| {
                let dropout_seed = mix_seed(
                    cfg.seed,
                    0xD0_0000_0000
                        + (epoch as u64) * 1_000_000
                        + (batch_no as u64) * 1_000
                        + sample_idx as u64,
                );
                gradients(
                    train_set[sample_idx],
                    snapshot,
                    cfg.l2_penalty,
                    Some(dropout_seed),
                )
            });
            let mut batch_grad = vec![0.0; params.values().len()];
            for (loss, grad) in &results {
                loss_sum += loss;
                for (b, g) in batch_grad.iter_mut().zip(grad) {
                    *b += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for b in &mut batch_grad {
                *b *= scale;
            }
            adam_step(&mut adam, &mut params, &batch_grad);
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_loss = validation_loss(&val_set, &params);
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            learning_rate: lr_in_effect,
        });

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_params = params.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                break;
            }
            if cfg.plateau_window > 0 && stale_epochs % cfg.plateau_window == 0 {
                adam.learning_rate *= cfg.lr_decay;
            }
        }
    }

    Ok(TrainOutcome {
        params: best_params,
        history,
        initial_val_loss,
        best_val_loss,
    })
}

/// Mean per-graph MSE over the validation set, dropout disabled.
fn validation_loss(val_set: &[&TrainingSample], params: &ModelParameters) -> f64 {
    let losses: Vec<f64> = parallel::map_slice(val_set, |sample| {
        let mask = NodeMask::all_alive(sample.graph.node_count());
        let state = forward(&sample.graph, &mask, params);
        mse(&sample.labels, &state.s_dis).expect("lengths match by construction")
    });
    losses.iter().sum::<f64>() / val_set.len().max(1) as f64
}
