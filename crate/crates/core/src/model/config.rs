use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Window length T.
    pub window_length: usize,
    /// Input channels S.
    pub n_channels: usize,
    /// Output classes C.
    pub n_classes: usize,
    /// Divide pooling scores by √d_model.
    pub attention_scaling: bool,
    /// Learn a `d_model × d_model` map applied to the pooling query.
    pub query_projection: bool,
}

impl ModelConfig {
    pub fn new(window_length: usize, n_channels: usize, n_classes: usize) -> Self {
        ModelConfig {
            d_model: 32,
            n_layers: 4,
            n_heads: 4,
            d_ff: 64,
            window_length,
            n_channels,
            n_classes,
            attention_scaling: true,
            query_projection: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("window_length", self.window_length),
            ("n_channels", self.n_channels),
            ("n_classes", self.n_classes),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Usage(format!("model config: {name} must be positive")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Usage(format!(
                "model config: d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !self.d_model.is_multiple_of(2) {
            return Err(Error::Usage(format!(
                "model config: sinusoidal positions need an even d_model, got {}",
                self.d_model
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Names and shapes of every parameter in checkpoint order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (d, f) = (self.d_model, self.d_ff);
        let mut out = vec![
            ("embed.weight".to_string(), vec![self.n_channels, d]),
            ("embed.bias".to_string(), vec![d]),
        ];
        for l in 0..self.n_layers {
            let p = |s: &str| format!("layer{l}.{s}");
            for proj in ["query", "key", "value", "out"] {
                out.push((p(&format!("attn.{proj}.weight")), vec![d, d]));
                out.push((p(&format!("attn.{proj}.bias")), vec![d]));
            }
            out.push((p("norm1.gamma"), vec![d]));
            out.push((p("norm1.beta"), vec![d]));
            out.push((p("ff1.weight"), vec![d, f]));
            out.push((p("ff1.bias"), vec![f]));
            out.push((p("ff2.weight"), vec![f, d]));
            out.push((p("ff2.bias"), vec![d]));
            out.push((p("norm2.gamma"), vec![d]));
            out.push((p("norm2.beta"), vec![d]));
        }
        if self.query_projection {
            out.push(("pool.query.weight".to_string(), vec![d, d]));
        }
        out.push(("head.weight".to_string(), vec![d, self.n_classes]));
        out.push(("head.bias".to_string(), vec![self.n_classes]));
        out
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let (d, f, s, c) = (self.d_model, self.d_ff, self.n_channels, self.n_classes);
        let per_layer = 4 * (d * d + d) + 2 * d * f + f + d + 4 * d;
        let pool = if self.query_projection { d * d } else { 0 };
        (s + 1) * d + self.n_layers * per_layer + pool + (d + 1) * c
    }
}
