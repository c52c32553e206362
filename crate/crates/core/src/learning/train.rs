//! Minibatch gradient descent with momentum.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::{ModelParams, Role, Sample, DEFAULT_DIMS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    /// L2 penalty coefficient added to every parameter's gradient.
    pub weight_decay: f64,
    /// Also train on every sample's half-turn counterpart.
    pub half_turn_augment: bool,
    /// Initialization and shuffling seed. Not a config-file key: runs set it
    /// from the run seed.
    #[serde(skip)]
    pub seed: u64,
    /// Frames with `|omega_c|` below this are dropped, rad/s.
    pub omega_floor: f64,
    /// Shard each batch across threads. Results then match the serial run
    /// only to about 1e-9 relative, not bit-exactly.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            epochs: 100,
            batch_size: 32,
            momentum: 0.9,
            weight_decay: 3e-4,
            half_turn_augment: true,
            seed: 0,
            omega_floor: 0.02,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate_with_prefix(&self, prefix: &str) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::ConfigRange { key: format!("{prefix}{key}"), msg: msg.into() });
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate", "must be > 0");
        }
        if self.epochs < 1 {
            return bad("epochs", "must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size", "must be >= 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must be in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay", "must be >= 0");
        }
        if !(self.omega_floor.is_finite() && self.omega_floor >= 0.0) {
            return bad("omega_floor", "must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: ModelParams,
    /// Mean loss over the kept samples before the first update.
    pub initial_loss: f64,
    /// Mean minibatch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub samples_used: usize,
}

/// Keeps samples with a finite label and `|command_omega| >= floor`.
pub fn filter_samples<'a>(dataset: &'a [Sample], floor: f64) -> Vec<&'a Sample> {
    dataset
        .iter()
        .filter(|s| s.label.is_finite() && s.command_omega.abs() >= floor && s.features.iter().all(|f| f.is_finite()))
        .collect()
}

fn batch_gradient(model: &ModelParams, batch: &[&Sample], parallel: bool) -> Result<(f64, Vec<f64>)> {
    let scale = 1.0 / batch.len() as f64;
    let n = model.params().len();
    if parallel {
        let parts: Vec<Result<(f64, Vec<f64>)>> = batch
            .par_chunks(16)
            .map(|chunk| {
                let mut g = vec![0.0; n];
                let mut l = 0.0;
                for s in chunk {
                    l += model.accumulate(&s.features, s.label, scale, &mut g)?;
                }
                Ok((l, g))
            })
            .collect();
        let mut grad = vec![0.0; n];
        let mut loss = 0.0;
        for p in parts {
            let (l, g) = p?;
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok((loss * scale, grad))
    } else {
        let mut grad = vec![0.0; n];
        let mut loss = 0.0;
        for s in batch {
            loss += model.accumulate(&s.features, s.label, scale, &mut grad)?;
        }
        Ok((loss * scale, grad))
    }
}

/// Mean squared error of `model` over `samples`.
pub fn mean_loss(model: &ModelParams, samples: &[&Sample]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        total += (model.forward(&s.features)? - s.label).powi(2);
    }
    Ok(total / samples.len().max(1) as f64)
}

/// Trains a fresh default-architecture model.
pub fn train(dataset: &[Sample], cfg: &TrainConfig, role: Role) -> Result<TrainReport> {
    let input = dataset.first().map_or(DEFAULT_DIMS[0], |s| s.features.len());
    let mut dims = DEFAULT_DIMS;
    dims[0] = input;
    train_with_dims(dataset, cfg, role, &dims)
}

pub fn train_with_dims(dataset: &[Sample], cfg: &TrainConfig, role: Role, dims: &[usize]) -> Result<TrainReport> {
    cfg.validate_with_prefix("training.")?;
    let kept = filter_samples(dataset, cfg.omega_floor);
    if kept.is_empty() {
        return Err(Error::Dataset(format!(
            "no usable samples: all {} were filtered by omega_floor = {}",
            dataset.len(),
            cfg.omega_floor
        )));
    }
    let mut model = ModelParams::init(role, dims, cfg.seed)?;
    let initial_loss = mean_loss(&model, &kept)?;
    let mut velocity = vec![0.0; model.params().len()];
    let mut order: Vec<usize> = (0..kept.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0F_BA7C);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut batches) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample> = idx.iter().map(|&i| kept[i]).collect();
            let (loss, grad) = batch_gradient(&model, &batch, cfg.parallel)?;
            for ((p, v), g) in model.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * (g + cfg.weight_decay * *p);
                *p += *v;
            }
            sum += loss;
            batches += 1;
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Model("training diverged to non-finite weights".into()));
        }
        epoch_losses.push(sum / batches as f64);
    }
    Ok(TrainReport { model, initial_loss, epoch_losses, samples_used: kept.len() })
}
