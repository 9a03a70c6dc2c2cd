use serde::{Deserialize, Serialize};

use crate::dataset::GestureDataset;
use crate::error::{Error, Result};

/// Statistics computed for every channel, in output order.
pub const FEATURE_KINDS: [&str; 6] = ["mean", "std", "min", "max", "rms", "mad1"];
pub const FEATURES_PER_CHANNEL: usize = FEATURE_KINDS.len();

/// Flattened `[S × F]` feature values, channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
}

/// `channel.stat` names matching the layout of [`extract_features`].
pub fn feature_names(channel_names: &[String]) -> Vec<String> {
    channel_names
        .iter()
        .flat_map(|c| FEATURE_KINDS.iter().map(move |k| format!("{c}.{k}")))
        .collect()
}

/// Per-channel statistics of one row-major `[T × S]` sample.
pub fn channel_features(sample: &[f32], t: usize, s: usize) -> Vec<f64> {
    assert_eq!(sample.len(), t * s, "sample must hold T x S values");
    assert!(t >= 2, "feature extraction needs T >= 2");
    let mut out = Vec::with_capacity(s * FEATURES_PER_CHANNEL);
    let n = t as f64;
    for c in 0..s {
        let x = |k: usize| sample[k * s + c] as f64;
        let (mut sum, mut sq, mut lo, mut hi, mut diff) = (0.0, 0.0, f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for k in 0..t {
            let v = x(k);
            sum += v;
            sq += v * v;
            lo = lo.min(v);
            hi = hi.max(v);
            if k > 0 {
                diff += (v - x(k - 1)).abs();
            }
        }
        let mean = sum / n;
        let var = (0..t).map(|k| (x(k) - mean).powi(2)).sum::<f64>() / n;
        out.extend([mean, var.sqrt(), lo, hi, (sq / n).sqrt(), diff / (n - 1.0)]);
    }
    out
}

/// Features of one sample of `ds`.
pub fn extract_features(ds: &GestureDataset, i: usize) -> FeatureVector {
    FeatureVector {
        values: channel_features(ds.sample(i), ds.window_length(), ds.n_channels()),
        feature_names: feature_names(&ds.channel_names()),
    }
}

/// Row-per-sample feature matrix for `indices`.
pub fn feature_matrix(ds: &GestureDataset, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    if ds.window_length() < 2 {
        return Err(Error::Usage("feature extraction needs T >= 2".into()));
    }
    Ok(indices
        .iter()
        .map(|&i| channel_features(ds.sample(i), ds.window_length(), ds.n_channels()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_channel() {
        let f = channel_features(&[2.5; 4], 4, 1);
        assert_eq!(f, vec![2.5, 0.0, 2.5, 2.5, 2.5, 0.0]);
        let f = channel_features(&[-3.0; 3], 3, 1);
        assert_eq!(f[4], 3.0);
    }

    #[test]
    fn alternating_channel() {
        let f = channel_features(&[0.0, 1.0, 0.0, 1.0], 4, 1);
        assert_eq!(f[0], 0.5);
        assert_eq!(f[1], 0.5);
        assert_eq!(f[5], 1.0);
    }

    #[test]
    fn layout_is_channel_major() {
        // two channels interleaved in time
        let f = channel_features(&[1.0, 10.0, 3.0, 30.0], 2, 2);
        assert_eq!(f.len(), 12);
        assert_eq!(f[0], 2.0);
        assert_eq!(f[6], 20.0);
        let names = feature_names(&["a".into(), "b".into()]);
        assert_eq!(names[6], "b.mean");
        assert_eq!(names[11], "b.mad1");
    }
}
