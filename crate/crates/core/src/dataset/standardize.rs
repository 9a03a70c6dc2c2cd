use serde::{Deserialize, Serialize};

use super::GestureDataset;
use crate::error::{Error, Result};
use glovenet_tensor::Tensor;

/// Lower bound applied to per-channel standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Statistics over every timestep of the samples at `indices`.
    pub fn fit(ds: &GestureDataset, indices: &[usize]) -> Result<ChannelStats> {
        if indices.is_empty() {
            return Err(Error::Usage("standardization needs at least one sample".into()));
        }
        let (t, s) = (ds.window_length(), ds.n_channels());
        let mut sum = vec![0.0f64; s];
        for &i in indices {
            for row in ds.sample(i).chunks(s) {
                for (acc, &v) in sum.iter_mut().zip(row) {
                    *acc += v as f64;
                }
            }
        }
        let count = (indices.len() * t) as f64;
        let mean: Vec<f64> = sum.iter().map(|x| x / count).collect();
        let mut sq = vec![0.0f64; s];
        for &i in indices {
            for row in ds.sample(i).chunks(s) {
                for c in 0..s {
                    let d = row[c] as f64 - mean[c];
                    sq[c] += d * d;
                }
            }
        }
        let std = sq.iter().map(|x| (x / count).sqrt().max(STD_FLOOR)).collect();
        Ok(ChannelStats { mean, std })
    }

    /// `(x − mean) / std` for every sample of `ds`.
    pub fn apply(&self, ds: &GestureDataset) -> Result<GestureDataset> {
        let s = ds.n_channels();
        if self.mean.len() != s {
            return Err(Error::Shape(format!(
                "standardization fitted on {} channels, dataset has {s}",
                self.mean.len()
            )));
        }
        let data = ds
            .samples
            .data()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let c = k % s;
                ((v as f64 - self.mean[c]) / self.std[c]) as f32
            })
            .collect();
        let mut out = ds.clone();
        out.samples = Tensor::new(ds.samples.shape().to_vec(), data)?;
        Ok(out)
    }
}

/// Fits statistics on `fit_indices` only and applies them to all of `ds`.
pub fn standardize(ds: &GestureDataset, fit_indices: &[usize]) -> Result<(GestureDataset, ChannelStats)> {
    let stats = ChannelStats::fit(ds, fit_indices)?;
    Ok((stats.apply(ds)?, stats))
}
