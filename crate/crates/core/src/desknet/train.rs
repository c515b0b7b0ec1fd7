//! Mini-batch SGD training with validation-based model selection.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{generate_dataset, stratified_split, Split, SplitSizes, SyntheticSample};
use super::model::{backward, cross_entropy, forward, predict, DeskNetParams, NetConfig, Variant};
use crate::error::{Error, Result};
use crate::rng;

const EVAL_KEY: u64 = 0xe7a1;
const SHUFFLE_STREAM: u64 = 0x5_4ff1e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub net: NetConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Drives initialization, shuffling and damage draws.
    pub seed: u64,
    /// Drives dataset generation and splitting.
    pub data_seed: u64,
    pub split: SplitSizes,
}

impl TrainConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            net: NetConfig::new(variant),
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
            data_seed: 0,
            split: SplitSizes::from_total(3000),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.split.train == 0 || self.split.val == 0 || self.split.test == 0 {
            return Err(Error::InvalidInput("every split must be non-empty".into()));
        }
        self.net.estimator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub variant: Variant,
    pub seed: u64,
    pub data_seed: u64,
    /// Measured with the parameters of the best validation epoch.
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub best_epoch: usize,
    pub param_count: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: RunMetrics,
    pub params: DeskNetParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Mean cross-entropy over `batch` and its parameter gradient.
/// Returns `(loss, grads, correct)`.
pub fn loss_and_grads(
    params: &DeskNetParams,
    batch: &[&SyntheticSample],
    cfg: &NetConfig,
    step_key: u64,
) -> Result<(f64, DeskNetParams, usize)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut grads = DeskNetParams::zeros(params.classifier_width());
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0;
    for s in batch {
        let f = forward(params, &s.image, cfg, rng::mix(&[step_key, s.id]))?;
        let (l, mut d) = cross_entropy(&f.logits, s.label);
        loss += l * scale;
        correct += usize::from(predict(&f.logits) == s.label);
        d.iter_mut().for_each(|v| *v *= scale);
        backward(params, &f.cache, &d, &mut grads, false);
    }
    Ok((loss, grads, correct))
}

pub fn evaluate(params: &DeskNetParams, data: &[SyntheticSample], cfg: &NetConfig, seed: u64) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut loss = 0.0;
    let mut correct = 0;
    for s in data {
        let f = forward(params, &s.image, cfg, rng::mix(&[EVAL_KEY, seed, s.id]))?;
        loss += cross_entropy(&f.logits, s.label).0;
        correct += usize::from(predict(&f.logits) == s.label);
    }
    let n = data.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}

/// Generates the dataset described by `cfg` and trains on it.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = generate_dataset(cfg.split.total(), cfg.data_seed);
    let split = stratified_split(data, cfg.split, cfg.data_seed);
    train_on(&split, cfg)
}

pub fn train_on(split: &Split, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let width = cfg.net.classifier_width();
    let mut params = DeskNetParams::init(width, cfg.seed);
    let mut best = (params.clone(), f64::NEG_INFINITY, 0usize);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<&SyntheticSample> = split.train.iter().collect();
    let mut shuffle = rng::stream(cfg.seed, SHUFFLE_STREAM);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total_loss = 0.0;
        let mut correct = 0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let key = rng::mix(&[cfg.seed, epoch as u64, b as u64]);
            let (loss, grads, c) = match loss_and_grads(&params, batch, &cfg.net, key) {
                Err(Error::NumericOverflow(_)) => return Err(Error::DivergedLoss { epoch, seed: cfg.seed }),
                other => other?,
            };
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::DivergedLoss { epoch, seed: cfg.seed });
            }
            total_loss += loss * batch.len() as f64;
            correct += c;
            params.add_scaled(&grads, -cfg.learning_rate);
        }
        let val = match evaluate(&params, &split.val, &cfg.net, cfg.seed) {
            Err(Error::NumericOverflow(_)) => return Err(Error::DivergedLoss { epoch, seed: cfg.seed }),
            other => other?,
        };
        if !val.loss.is_finite() {
            return Err(Error::DivergedLoss { epoch, seed: cfg.seed });
        }
        let n = order.len() as f64;
        history.push(EpochRecord {
            epoch,
            train_loss: total_loss / n,
            train_accuracy: correct as f64 / n,
            val_loss: val.loss,
            val_accuracy: val.accuracy,
        });
        if val.accuracy > best.1 {
            best = (params.clone(), val.accuracy, epoch);
        }
    }

    let (params, _, best_epoch) = best;
    let test = evaluate(&params, &split.test, &cfg.net, cfg.seed)?;
    Ok(TrainOutcome {
        metrics: RunMetrics {
            variant: cfg.net.variant,
            seed: cfg.seed,
            data_seed: cfg.data_seed,
            test_accuracy: test.accuracy,
            test_loss: test.loss,
            best_epoch,
            param_count: params.count(),
            history,
        },
        params,
    })
}
