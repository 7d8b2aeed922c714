use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::backprop::{loss_and_gradient, Batch};
use super::{adam_step, init_model, AdamState, LabeledSet, MlpModel};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, prng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 100,
            validation_fraction: 0.2,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", self.epochs, "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", self.batch_size, "must be at least 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid(
                "validation_fraction",
                self.validation_fraction,
                "must lie in (0, 1)",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", self.learning_rate, "must be positive"));
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return Err(Error::invalid("adam_beta1", self.adam_beta1, "must lie in (0, 1)"));
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return Err(Error::invalid("adam_beta2", self.adam_beta2, "must lie in (0, 1)"));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::invalid("adam_epsilon", self.adam_epsilon, "must be positive"));
        }
        Ok(())
    }

    /// Number of rows held out for validation out of `m`.
    pub fn validation_size(&self, m: usize) -> usize {
        (self.validation_fraction * m as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Training-set MSE after the epoch, in USD².
    pub train_mse: f64,
    /// Validation MSE after the epoch, in USD².
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_size: usize,
    pub validation_size: usize,
    pub epochs: Vec<EpochStats>,
}

fn mse_usd(model: &MlpModel, data: &Batch, idx: &[usize]) -> f64 {
    let s = model.target_scale.scale;
    let sum: f64 = idx
        .iter()
        .map(|&i| {
            let x = &data.x[i * super::INPUT_DIM..(i + 1) * super::INPUT_DIM];
            let r = model.forward_normalized(x) - data.t[i];
            r * r
        })
        .sum();
    sum / idx.len() as f64 * s * s
}

/// Trains a fresh network with mini-batch Adam on MSE.
///
/// The validation rows are split off once by a seeded shuffle; each epoch then
/// reshuffles the training rows. The final batch of an epoch may be short.
pub fn train(data: &LabeledSet, widths: &[usize], config: &TrainConfig) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    let m = data.len();
    let n_val = config.validation_size(m);
    let n_train = m - n_val.min(m);
    if n_val == 0 || n_train < config.batch_size {
        return Err(Error::InsufficientData(format!(
            "{m} rows give {n_train} training and {n_val} validation rows; need at least {} training rows and one validation row",
            config.batch_size
        )));
    }

    let mut model = init_model(widths, derive_seed(config.seed, "init", 0))?;
    let prepared = Batch::from_set(&model, data);

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut prng(derive_seed(config.seed, "split", 0)));
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();

    let mut state = AdamState::new(&model);
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut prng(derive_seed(config.seed, "epoch", epoch as u64)));
        for batch in train_idx.chunks(config.batch_size) {
            let (_, grad) = loss_and_gradient(&model, &prepared, batch);
            adam_step(&mut model, &mut state, &grad, config)?;
        }
        epochs.push(EpochStats {
            epoch: epoch + 1,
            train_mse: mse_usd(&model, &prepared, &train_idx),
            validation_mse: mse_usd(&model, &prepared, &val_idx),
        });
    }
    Ok((
        model,
        TrainReport {
            train_size: n_train,
            validation_size: n_val,
            epochs,
        },
    ))
}
