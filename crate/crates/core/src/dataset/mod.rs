//! Gesture datasets: canonical layout, on-disk format, synthetic generation,
//! windowing, trial-aware folds, standardization and sensor masking.

mod folds;
mod io;
mod mask;
mod standardize;
pub mod synth;
mod window;

pub use folds::{make_loto_folds, trial_holdout, Fold, FoldSpec};
pub use io::{load_dataset, save_dataset, DATA_FILE, MANIFEST_FILE};
pub use mask::{apply_sensor_mask, SensorMask};
pub use standardize::{standardize, ChannelStats, STD_FLOOR};
pub use synth::{generate_synthetic, GeneratorOptions, Vocabulary};
pub use window::{window_count, window_nonoverlap, window_offsets, window_semioverlap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use glovenet_tensor::Tensor;

/// One physical sensor and the number of consecutive channels it owns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub name: String,
    pub channels: usize,
}

impl SensorSpec {
    pub fn new(name: impl Into<String>, channels: usize) -> Self {
        SensorSpec {
            name: name.into(),
            channels,
        }
    }
}

/// Axis names for the 6-channel IMU layout (3-axis accelerometer followed by
/// 3-axis gyroscope).
pub const IMU_AXES: [&str; 6] = ["ax", "ay", "az", "gx", "gy", "gz"];

/// Fixed-length labelled samples, stored `[N × T × S]`.
///
/// Class 0 is always the null (no gesture) class.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureDataset {
    pub name: String,
    pub samples: Tensor<f32>,
    pub labels: Vec<usize>,
    pub trial_ids: Vec<u32>,
    pub subject_ids: Vec<u32>,
    pub class_names: Vec<String>,
    pub sensor_layout: Vec<SensorSpec>,
    pub sample_rate_hz: f64,
}

impl GestureDataset {
    pub fn n_samples(&self) -> usize {
        self.samples.shape()[0]
    }

    pub fn window_length(&self) -> usize {
        self.samples.shape()[1]
    }

    pub fn n_channels(&self) -> usize {
        self.samples.shape()[2]
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Row-major `[T × S]` slice of sample `i`.
    pub fn sample(&self, i: usize) -> &[f32] {
        let len = self.window_length() * self.n_channels();
        &self.samples.data()[i * len..(i + 1) * len]
    }

    /// Human-readable name of every channel, e.g. `index.gy`.
    pub fn channel_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_channels());
        for s in &self.sensor_layout {
            for c in 0..s.channels {
                let axis = if s.channels == IMU_AXES.len() {
                    IMU_AXES[c].to_string()
                } else {
                    format!("c{c}")
                };
                names.push(format!("{}.{axis}", s.name));
            }
        }
        names
    }

    /// Distinct trial ids in ascending order.
    pub fn distinct_trials(&self) -> Vec<u32> {
        let mut t = self.trial_ids.clone();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Checks every structural invariant of the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.samples.rank() != 3 {
            return Err(Error::Validation(format!(
                "samples must be [N, T, S], got {:?}",
                self.samples.shape()
            )));
        }
        let n = self.n_samples();
        for (what, len) in [
            ("labels", self.labels.len()),
            ("trial_ids", self.trial_ids.len()),
            ("subject_ids", self.subject_ids.len()),
        ] {
            if len != n {
                return Err(Error::Validation(format!("{what} has {len} entries for {n} samples")));
            }
        }
        let c = self.n_classes();
        if c < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 classes (null + 1), got {c}"
            )));
        }
        if let Some((i, &l)) = self.labels.iter().enumerate().find(|(_, &l)| l >= c) {
            return Err(Error::Validation(format!(
                "label {l} at sample {i} is out of range for {c} classes"
            )));
        }
        let layout_channels: usize = self.sensor_layout.iter().map(|s| s.channels).sum();
        if layout_channels != self.n_channels() || self.sensor_layout.iter().any(|s| s.channels == 0) {
            return Err(Error::Validation(format!(
                "sensor layout declares {layout_channels} channels, samples have {}",
                self.n_channels()
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Validation(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !self.samples.is_finite() {
            return Err(Error::Validation("samples contain non-finite values".into()));
        }
        Ok(())
    }

    /// New dataset holding `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<GestureDataset> {
        if indices.is_empty() {
            return Err(Error::Usage("cannot take an empty subset".into()));
        }
        let n = self.n_samples();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Usage(format!("sample index {bad} out of range for {n} samples")));
        }
        let (t, s) = (self.window_length(), self.n_channels());
        let mut data = Vec::with_capacity(indices.len() * t * s);
        for &i in indices {
            data.extend_from_slice(self.sample(i));
        }
        Ok(GestureDataset {
            name: self.name.clone(),
            samples: Tensor::new(vec![indices.len(), t, s], data)?,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            trial_ids: indices.iter().map(|&i| self.trial_ids[i]).collect(),
            subject_ids: indices.iter().map(|&i| self.subject_ids[i]).collect(),
            class_names: self.class_names.clone(),
            sensor_layout: self.sensor_layout.clone(),
            sample_rate_hz: self.sample_rate_hz,
        })
    }

    /// Indices of samples whose trial is in `trials`.
    pub fn indices_of_trials(&self, trials: &[u32]) -> Vec<usize> {
        self.trial_ids
            .iter()
            .enumerate()
            .filter(|(_, t)| trials.contains(t))
            .map(|(i, _)| i)
            .collect()
    }
}
