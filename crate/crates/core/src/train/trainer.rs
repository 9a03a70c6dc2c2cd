use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use glovenet_tensor::ops::argmax_rows;
use glovenet_tensor::{adam_step, AdamState, Tensor};

use super::ConfusionMatrix;
use crate::dataset::GestureDataset;
use crate::error::{Error, Result};
use crate::model::TransformerClassifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Reshuffle the sample order every epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Usage("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Usage(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Sample-weighted mean of the mini-batch losses.
    pub loss: f64,
    /// Accuracy of the mini-batch predictions made before each update.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Training-set loss before the first update.
    pub initial_loss: f64,
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.accuracy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,accuracy\n");
        let _ = writeln!(out, "0,{:.6},", self.initial_loss);
        for e in &self.epochs {
            let _ = writeln!(out, "{},{:.6},{:.6}", e.epoch, e.loss, e.accuracy);
        }
        out
    }
}

/// `[B × T × S]` tensor holding the given samples in order.
pub fn batch_tensor(ds: &GestureDataset, indices: &[usize]) -> Result<Tensor<f32>> {
    let (t, s) = (ds.window_length(), ds.n_channels());
    let mut data = Vec::with_capacity(indices.len() * t * s);
    for &i in indices {
        data.extend_from_slice(ds.sample(i));
    }
    Ok(Tensor::new(vec![indices.len(), t, s], data)?)
}

fn check_compatible(model: &TransformerClassifier<f32>, ds: &GestureDataset) -> Result<()> {
    let c = model.config();
    if (c.window_length, c.n_channels) != (ds.window_length(), ds.n_channels()) {
        return Err(Error::Shape(format!(
            "model expects T={} S={}, dataset has T={} S={}",
            c.window_length,
            c.n_channels,
            ds.window_length(),
            ds.n_channels()
        )));
    }
    if c.n_classes != ds.n_classes() {
        return Err(Error::Shape(format!(
            "model has {} classes, dataset has {}",
            c.n_classes,
            ds.n_classes()
        )));
    }
    Ok(())
}

const EVAL_CHUNK: usize = 128;

/// Mini-batch Adam on the mean cross-entropy of every sample of `ds`.
pub fn train(model: &mut TransformerClassifier<f32>, ds: &GestureDataset, cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if ds.n_samples() == 0 {
        return Err(Error::Usage("training set is empty".into()));
    }
    check_compatible(model, ds)?;
    let n = ds.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(model.params().iter(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..n).collect();

    let initial_loss = mean_loss(model, ds)?;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let x = batch_tensor(ds, batch)?;
            let labels: Vec<usize> = batch.iter().map(|&i| ds.labels[i]).collect();
            let (loss, grads, logits) = model.loss_grads_logits(&x, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss became {loss} in epoch {epoch}")));
            }
            loss_sum += loss as f64 * batch.len() as f64;
            correct += argmax_rows(&logits, model.config().n_classes)
                .iter()
                .zip(&labels)
                .filter(|(p, l)| p == l)
                .count();
            let grad_refs: Vec<&[f32]> = grads.iter().map(Vec::as_slice).collect();
            let mut params: Vec<&mut Tensor<f32>> = model.params_mut().iter_mut().collect();
            adam_step(&mut params, &grad_refs, &mut adam)?;
        }
        if !model.is_finite() {
            return Err(Error::NonFinite(format!(
                "parameters became non-finite in epoch {epoch}"
            )));
        }
        epochs.push(EpochLog {
            epoch,
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        });
    }
    Ok(TrainLog { initial_loss, epochs })
}

fn mean_loss(model: &TransformerClassifier<f32>, ds: &GestureDataset) -> Result<f64> {
    let all: Vec<usize> = (0..ds.n_samples()).collect();
    let mut sum = 0.0;
    for chunk in all.chunks(EVAL_CHUNK) {
        let labels: Vec<usize> = chunk.iter().map(|&i| ds.labels[i]).collect();
        sum += model.loss(&batch_tensor(ds, chunk)?, &labels)? as f64 * chunk.len() as f64;
    }
    Ok(sum / ds.n_samples() as f64)
}

/// Predicted class of every sample of `ds`.
pub fn predict_dataset(model: &TransformerClassifier<f32>, ds: &GestureDataset) -> Result<Vec<usize>> {
    check_compatible(model, ds)?;
    let all: Vec<usize> = (0..ds.n_samples()).collect();
    let mut out = Vec::with_capacity(all.len());
    for chunk in all.chunks(EVAL_CHUNK) {
        out.extend(model.predict(&batch_tensor(ds, chunk)?)?);
    }
    Ok(out)
}

/// Accuracy and confusion matrix of `model` on every sample of `ds`.
pub fn evaluate(model: &TransformerClassifier<f32>, ds: &GestureDataset) -> Result<(f64, ConfusionMatrix)> {
    if ds.n_samples() == 0 {
        return Err(Error::Usage("test set is empty".into()));
    }
    let pred = predict_dataset(model, ds)?;
    let m = ConfusionMatrix::from_predictions(ds.class_names.clone(), &ds.labels, &pred)?;
    Ok((m.accuracy(), m))
}
