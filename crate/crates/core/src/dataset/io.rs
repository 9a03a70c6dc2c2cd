use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GestureDataset, SensorSpec};
use crate::error::{Error, Result};
use glovenet_tensor::Tensor;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.f32";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    name: String,
    n_samples: usize,
    window_length: usize,
    channels: usize,
    sample_rate_hz: f64,
    class_names: Vec<String>,
    sensor_layout: Vec<SensorSpec>,
    labels: Vec<usize>,
    trial_ids: Vec<u32>,
    subject_ids: Vec<u32>,
}

/// Writes `manifest.json` and the little-endian `data.f32` blob into `dir`.
pub fn save_dataset(ds: &GestureDataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir)?;
    let mut blob = Vec::with_capacity(ds.samples.numel() * 4);
    for v in ds.samples.data() {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(DATA_FILE), blob)?;
    let manifest = Manifest {
        name: ds.name.clone(),
        n_samples: ds.n_samples(),
        window_length: ds.window_length(),
        channels: ds.n_channels(),
        sample_rate_hz: ds.sample_rate_hz,
        class_names: ds.class_names.clone(),
        sensor_layout: ds.sensor_layout.clone(),
        labels: ds.labels.clone(),
        trial_ids: ds.trial_ids.clone(),
        subject_ids: ds.subject_ids.clone(),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Reads a dataset directory and checks every invariant.
pub fn load_dataset(dir: &Path) -> Result<GestureDataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", manifest_path.display())))?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("corrupt {}: {e}", manifest_path.display())))?;

    if m.n_samples == 0 || m.window_length == 0 || m.channels == 0 {
        return Err(Error::Format(format!(
            "manifest dimensions must be positive, got N={} T={} S={}",
            m.n_samples, m.window_length, m.channels
        )));
    }
    let data_path = dir.join(DATA_FILE);
    let blob = fs::read(&data_path).map_err(|e| Error::Format(format!("cannot read {}: {e}", data_path.display())))?;
    let expected = m.n_samples * m.window_length * m.channels * 4;
    if blob.len() != expected {
        return Err(Error::Format(format!(
            "{}: expected {expected} bytes (N={} x T={} x S={} x 4), found {}",
            data_path.display(),
            m.n_samples,
            m.window_length,
            m.channels,
            blob.len()
        )));
    }
    let data: Vec<f32> = blob
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();

    let ds = GestureDataset {
        name: m.name,
        samples: Tensor::new(vec![m.n_samples, m.window_length, m.channels], data)?,
        labels: m.labels,
        trial_ids: m.trial_ids,
        subject_ids: m.subject_ids,
        class_names: m.class_names,
        sensor_layout: m.sensor_layout,
        sample_rate_hz: m.sample_rate_hz,
    };
    ds.validate()?;
    Ok(ds)
}
