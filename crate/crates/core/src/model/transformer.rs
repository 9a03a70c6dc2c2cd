use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use glovenet_tensor::ops::argmax_rows;
use glovenet_tensor::{Real, Tape, Tensor, Var};

use super::config::ModelConfig;
use super::layers::{attention_pool, encoder_layer, linear, positional_encoding, AttentionParams, EncoderParams};
use crate::error::{Error, Result};

/// Embedding, sinusoidal positions, post-norm encoder stack, last-step
/// attention pooling and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerClassifier<F: Real = f32> {
    config: ModelConfig,
    params: Vec<Tensor<F>>,
}

/// Vars produced by recording one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub logits: Var,
    /// One per parameter, in checkpoint order.
    pub params: Vec<Var>,
    /// `[B × H × T × T]` per encoder layer.
    pub attention: Vec<Var>,
    /// `[B × T]`.
    pub pool_weights: Var,
}

/// Intermediate values of a forward pass, for inspection.
#[derive(Debug, Clone)]
pub struct ForwardTrace<F: Real> {
    pub logits: Tensor<F>,
    pub attention: Vec<Tensor<F>>,
    pub pool_weights: Tensor<F>,
}

impl<F: Real> TransformerClassifier<F> {
    /// Weights uniform in ±√(1/fan_in), biases zero, layer norms identity,
    /// head zero so that every initial prediction is uniform.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = config
            .param_shapes()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data: Vec<F> = if name.ends_with(".gamma") {
                    vec![F::one(); n]
                } else if shape.len() == 1 || name.starts_with("head.") {
                    vec![F::zero(); n]
                } else {
                    let bound = (1.0 / shape[0] as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                    (0..n).map(|_| F::from_f64(dist.sample(&mut rng))).collect()
                };
                Tensor::new(shape, data)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(TransformerClassifier { config, params })
    }

    /// Rebuilds a model from parameters in checkpoint order.
    pub fn from_params(config: ModelConfig, params: Vec<Tensor<F>>) -> Result<Self> {
        config.validate()?;
        let shapes = config.param_shapes();
        if shapes.len() != params.len() {
            return Err(Error::Shape(format!(
                "config needs {} parameter tensors, got {}",
                shapes.len(),
                params.len()
            )));
        }
        for ((name, shape), p) in shapes.iter().zip(&params) {
            if p.shape() != shape.as_slice() {
                return Err(Error::Shape(format!("{name}: expected {shape:?}, got {:?}", p.shape())));
            }
        }
        Ok(TransformerClassifier { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor<F>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<F>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.numel()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Same parameters in another precision.
    pub fn cast<G: Real>(&self) -> TransformerClassifier<G> {
        TransformerClassifier {
            config: self.config.clone(),
            params: self.params.iter().map(|p| p.cast()).collect(),
        }
    }

    /// Flattened copy of every parameter, in checkpoint order.
    pub fn flat_params(&self) -> Vec<F> {
        self.params.iter().flat_map(|p| p.data().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[F]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameter values, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut at = 0;
        for p in &mut self.params {
            let n = p.numel();
            p.data_mut().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        let c = &self.config;
        if shape.len() != 3 || shape[0] == 0 || shape[1] != c.window_length || shape[2] != c.n_channels {
            return Err(Error::Shape(format!(
                "model expects input [B, {}, {}], got {shape:?}",
                c.window_length, c.n_channels
            )));
        }
        Ok(())
    }

    /// Records the full forward pass of `x` (`[B × T × S]`) onto `tape`.
    /// Parameters are recorded as differentiable leaves iff `with_grad`.
    pub fn record(&self, tape: &mut Tape<F>, x: Var, with_grad: bool) -> Result<ForwardVars> {
        self.check_input(tape.value(x).shape())?;
        let c = &self.config;
        let params: Vec<Var> = self
            .params
            .iter()
            .map(|p| {
                if with_grad {
                    tape.leaf(p.clone().with_grad())
                } else {
                    tape.constant(p.clone())
                }
            })
            .collect();
        let mut it = params.iter().copied();
        let mut next = || it.next().expect("parameter list matches config");

        let (we, be) = (next(), next());
        let mut h = linear(tape, x, we, be)?;
        let pe = tape.constant(positional_encoding(c.window_length, c.d_model)?);
        h = tape.add_broadcast(h, pe)?;

        let mut attention = Vec::with_capacity(c.n_layers);
        for _ in 0..c.n_layers {
            let attn = AttentionParams {
                wq: next(),
                bq: next(),
                wk: next(),
                bk: next(),
                wv: next(),
                bv: next(),
                wo: next(),
                bo: next(),
            };
            let p = EncoderParams {
                attn,
                norm1: (next(), next()),
                ff1: (next(), next()),
                ff2: (next(), next()),
                norm2: (next(), next()),
            };
            let (out, w) = encoder_layer(tape, h, &p, c.n_heads)?;
            h = out;
            attention.push(w);
        }
        let query = c.query_projection.then(&mut next);
        let (pooled, pool_weights) = attention_pool(tape, h, query, c.attention_scaling)?;
        let (wh, bh) = (next(), next());
        let logits = linear(tape, pooled, wh, bh)?;
        Ok(ForwardVars {
            logits,
            params,
            attention,
            pool_weights,
        })
    }

    /// `[B × C]` logits.
    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        Ok(self.trace(x)?.logits)
    }

    pub fn trace(&self, x: &Tensor<F>) -> Result<ForwardTrace<F>> {
        self.check_input(x.shape())?;
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let vars = self.record(&mut tape, xv, false)?;
        Ok(ForwardTrace {
            logits: tape.value(vars.logits).clone(),
            attention: vars.attention.iter().map(|&v| tape.value(v).clone()).collect(),
            pool_weights: tape.value(vars.pool_weights).clone(),
        })
    }

    /// Highest-logit class per sample, lowest index on ties.
    pub fn predict(&self, x: &Tensor<F>) -> Result<Vec<usize>> {
        let logits = self.forward(x)?;
        Ok(argmax_rows(logits.data(), self.config.n_classes))
    }

    /// Mean cross-entropy on `(x, labels)` and its gradient for every parameter.
    pub fn loss_and_grads(&self, x: &Tensor<F>, labels: &[usize]) -> Result<(F, Vec<Vec<F>>)> {
        let (loss, grads, _) = self.loss_grads_logits(x, labels)?;
        Ok((loss, grads))
    }

    /// As [`Self::loss_and_grads`], also returning the flat `[B × C]` logits.
    pub fn loss_grads_logits(&self, x: &Tensor<F>, labels: &[usize]) -> Result<(F, Vec<Vec<F>>, Vec<F>)> {
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let vars = self.record(&mut tape, xv, true)?;
        let loss = tape.cross_entropy(vars.logits, labels)?;
        tape.backward(loss)?;
        let grads = vars
            .params
            .iter()
            .zip(&self.params)
            .map(|(&v, p)| tape.grad(v).map_or_else(|| vec![F::zero(); p.numel()], <[F]>::to_vec))
            .collect();
        Ok((tape.value(loss).item(), grads, tape.value(vars.logits).data().to_vec()))
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, x: &Tensor<F>, labels: &[usize]) -> Result<F> {
        Ok(glovenet_tensor::ops::cross_entropy(&self.forward(x)?, labels)?)
    }
}
