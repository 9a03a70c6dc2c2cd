//! Checkpoint layout: `model.json` holds the config and the ordered list of
//! parameter names and shapes; `params.f32` concatenates every parameter as
//! little-endian f32 in that order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, TransformerClassifier};
use crate::error::{Error, Result};
use glovenet_tensor::Tensor;

pub const CHECKPOINT_CONFIG: &str = "model.json";
pub const CHECKPOINT_PARAMS: &str = "params.f32";

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointManifest {
    config: ModelConfig,
    param_count: usize,
    params: Vec<ParamEntry>,
}

pub fn save_checkpoint(model: &TransformerClassifier<f32>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = CheckpointManifest {
        config: model.config().clone(),
        param_count: model.param_count(),
        params: model
            .config()
            .param_shapes()
            .into_iter()
            .map(|(name, shape)| ParamEntry { name, shape })
            .collect(),
    };
    let mut blob = Vec::with_capacity(model.param_count() * 4);
    for v in model.flat_params() {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(CHECKPOINT_PARAMS), blob)?;
    fs::write(dir.join(CHECKPOINT_CONFIG), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<TransformerClassifier<f32>> {
    let path = dir.join(CHECKPOINT_CONFIG);
    let text = fs::read_to_string(&path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let m: CheckpointManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("corrupt {}: {e}", path.display())))?;
    m.config
        .validate()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let expected = m.config.param_shapes();
    let listed: Vec<(String, Vec<usize>)> = m.params.into_iter().map(|p| (p.name, p.shape)).collect();
    if listed != expected || m.param_count != m.config.param_count() {
        return Err(Error::Format(format!(
            "{}: parameter list does not match the model config",
            path.display()
        )));
    }
    let blob_path = dir.join(CHECKPOINT_PARAMS);
    let blob = fs::read(&blob_path).map_err(|e| Error::Format(format!("cannot read {}: {e}", blob_path.display())))?;
    if blob.len() != m.param_count * 4 {
        return Err(Error::Format(format!(
            "{}: expected {} bytes, found {}",
            blob_path.display(),
            m.param_count * 4,
            blob.len()
        )));
    }
    let mut values = blob
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    let params = expected
        .into_iter()
        .map(|(_, shape)| {
            let n = shape.iter().product();
            Tensor::new(shape, values.by_ref().take(n).collect())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    TransformerClassifier::from_params(m.config, params)
}
