//! Optimization: Adam on the flat parameter vector, a stepped learning-rate
//! schedule, mini-batch shuffling, and patient folds for cross-validation.


use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{softmax_cross_entropy, NnError};
use crate::selfonn::{Model, ModelInput};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{0}")]
    Empty(String),
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
    #[error("training diverged: non-finite {what} in epoch {epoch}, batch {batch}")]
    Diverged {
        what: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Training hyperparameters. The learning rate starts at `base_lr` and is
/// multiplied by `decay_factor` every `decay_every` epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    /// Shuffling seed; the model's own initialization seed is separate.
    pub seed: u64,
    /// Optional global gradient-norm ceiling; off unless set.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 35,
            batch_size: 128,
            base_lr: 0.01,
            decay_every: 10,
            decay_factor: 0.1,
            seed: 0,
            grad_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::BadConfig("epochs must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(TrainError::BadConfig(
                "batch size must be at least 2 for batch statistics".into(),
            ));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(TrainError::BadConfig("learning rate must be positive".into()));
        }
        if self.decay_every == 0 {
            return Err(TrainError::BadConfig("decay interval must be positive".into()));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(TrainError::BadConfig(
                "decay factor must be in (0, 1]".into(),
            ));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(TrainError::BadConfig("gradient ceiling must be positive".into()));
            }
        }
        Ok(())
    }

    /// Learning rate for a zero-based epoch index.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        self.base_lr * self.decay_factor.powi((epoch / self.decay_every) as i32)
    }
}

/// Adam with bias correction over one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One update in place: first and second moment averages, bias
    /// correction, then the scaled step.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// What one epoch did, for progress reporting and the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Cross-entropy summed over the epoch divided by examples seen.
    pub mean_loss: f64,
    /// Examples actually consumed; a trailing batch of one is dropped
    /// because batch statistics need two.
    pub seen: usize,
}

/// Train in place. Examples are reshuffled every epoch from the config seed,
/// so a fixed seed gives a bit-identical run. Returns the per-epoch log.
pub fn train_model(
    model: &mut Model,
    inputs: &[ModelInput],
    labels: &[usize],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<Vec<EpochStats>, TrainError> {
    train_model_observed(model, inputs, labels, config, |_, stats| on_epoch(stats))
}

/// [`train_model`], but the callback also sees the model after each epoch,
/// for validation passes and best-so-far snapshots.
pub fn train_model_observed(
    model: &mut Model,
    inputs: &[ModelInput],
    labels: &[usize],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&Model, &EpochStats),
) -> Result<Vec<EpochStats>, TrainError> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(TrainError::Empty("no training examples".into()));
    }
    if inputs.len() != labels.len() {
        return Err(TrainError::LengthMismatch {
            inputs: inputs.len(),
            labels: labels.len(),
        });
    }
    let classes = model.config.classes;
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(TrainError::BadLabel { label, classes });
    }
    if inputs.len() < 2 {
        return Err(TrainError::Empty(
            "need at least two examples for batch statistics".into(),
        ));
    }

    let mut params = Vec::with_capacity(model.param_count());
    model.write_params(&mut params);
    let mut adam = AdamState::new(params.len());
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = config.lr_at_epoch(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            if batch.len() < 2 {
                continue;
            }
            let batch_inputs: Vec<ModelInput> =
                batch.iter().map(|&i| inputs[i].clone()).collect();
            let batch_labels: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (logits, cache) = model.forward_train(&batch_inputs)?;
            let (loss, dlogits) = softmax_cross_entropy(&logits, &batch_labels)?;
            if !loss.is_finite() {
                return Err(TrainError::Diverged {
                    what: "loss",
                    epoch,
                    batch: batch_index,
                });
            }
            let grads = model.backward(&cache, &dlogits)?;
            let mut flat = grads.to_vec();
            if flat.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::Diverged {
                    what: "gradient",
                    epoch,
                    batch: batch_index,
                });
            }
            if let Some(ceiling) = config.grad_clip {
                let norm = flat.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > ceiling {
                    let scale = ceiling / norm;
                    for g in &mut flat {
                        *g *= scale;
                    }
                }
            }
            adam.update(&mut params, &flat, lr);
            model.read_params(&params)?;
            loss_sum += loss;
            seen += batch.len();
        }
        let stats = EpochStats {
            epoch,
            lr,
            mean_loss: loss_sum / seen.max(1) as f64,
            seen,
        };
        on_epoch(model, &stats);
        log.push(stats);
    }
    Ok(log)
}

/// Split `0..n` into `k` folds as even as possible, the first `n mod k`
/// folds one longer. Items keep their order inside a fold.
pub fn make_folds(n: usize, k: usize) -> Result<Vec<Vec<usize>>, TrainError> {
    if k == 0 {
        return Err(TrainError::BadConfig("fold count must be positive".into()));
    }
    if n < k {
        return Err(TrainError::BadConfig(format!(
            "cannot cut {n} items into {k} folds"
        )));
    }
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut next = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        folds.push((next..next + len).collect());
        next += len;
    }
    Ok(folds)
}
