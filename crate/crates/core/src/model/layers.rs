//! Building blocks recorded onto a [`Tape`].

use glovenet_tensor::{Real, Tape, Tensor, Var};

use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `PE[pos][2i] = sin(pos / 10000^(2i/d))`, `PE[pos][2i+1] = cos(·)`.
pub fn positional_encoding<F: Real>(t: usize, d: usize) -> Result<Tensor<F>> {
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::Usage(format!(
            "positional encoding needs an even positive width, got {d}"
        )));
    }
    let mut data = Vec::with_capacity(t * d);
    for pos in 0..t {
        for j in 0..d {
            let i2 = (j - j % 2) as f64;
            let angle = pos as f64 / 10000f64.powf(i2 / d as f64);
            data.push(F::from_f64(if j % 2 == 0 { angle.sin() } else { angle.cos() }));
        }
    }
    Ok(Tensor::new(vec![t, d], data)?)
}

/// `x · w + b` applied to the last axis.
pub fn linear<F: Real>(tape: &mut Tape<F>, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    Ok(tape.add_broadcast(y, b)?)
}

/// Weights of one multi-head self-attention block.
#[derive(Debug, Clone, Copy)]
pub struct AttentionParams {
    pub wq: Var,
    pub bq: Var,
    pub wk: Var,
    pub bk: Var,
    pub wv: Var,
    pub bv: Var,
    pub wo: Var,
    pub bo: Var,
}

/// Bidirectional scaled dot-product self-attention over `[B × T × d]`.
/// Returns the projected output and the `[B × H × T × T]` weights.
pub fn multi_head_attention<F: Real>(
    tape: &mut Tape<F>,
    x: Var,
    p: &AttentionParams,
    n_heads: usize,
) -> Result<(Var, Var)> {
    let shape = tape.value(x).shape().to_vec();
    let (b, t, d) = (shape[0], shape[1], shape[2]);
    let dh = d / n_heads;
    let q = linear(tape, x, p.wq, p.bq)?;
    let k = linear(tape, x, p.wk, p.bk)?;
    let v = linear(tape, x, p.wv, p.bv)?;
    let split = |tape: &mut Tape<F>, y: Var, perm: &[usize]| -> Result<Var> {
        let y = tape.reshape(y, vec![b, t, n_heads, dh])?;
        Ok(tape.permute(y, perm)?)
    };
    let q = split(tape, q, &[0, 2, 1, 3])?;
    let kt = split(tape, k, &[0, 2, 3, 1])?;
    let v = split(tape, v, &[0, 2, 1, 3])?;
    let scores = tape.matmul(q, kt)?;
    let scores = tape.scale(scores, 1.0 / (dh as f64).sqrt())?;
    let weights = tape.softmax(scores, 3)?;
    let ctx = tape.matmul(weights, v)?;
    let ctx = tape.permute(ctx, &[0, 2, 1, 3])?;
    let ctx = tape.reshape(ctx, vec![b, t, d])?;
    Ok((linear(tape, ctx, p.wo, p.bo)?, weights))
}

/// Post-norm encoder layer parameters.
#[derive(Debug, Clone, Copy)]
pub struct EncoderParams {
    pub attn: AttentionParams,
    pub norm1: (Var, Var),
    pub ff1: (Var, Var),
    pub ff2: (Var, Var),
    pub norm2: (Var, Var),
}

/// `x ← LN(x + MHA(x)); x ← LN(x + FFN(x))`. Also returns the attention weights.
pub fn encoder_layer<F: Real>(tape: &mut Tape<F>, x: Var, p: &EncoderParams, n_heads: usize) -> Result<(Var, Var)> {
    let (attn, weights) = multi_head_attention(tape, x, &p.attn, n_heads)?;
    let h = tape.add(x, attn)?;
    let h = tape.layer_norm(h, p.norm1.0, p.norm1.1, LAYER_NORM_EPS)?;
    let f = linear(tape, h, p.ff1.0, p.ff1.1)?;
    let f = tape.relu(f)?;
    let f = linear(tape, f, p.ff2.0, p.ff2.1)?;
    let out = tape.add(h, f)?;
    Ok((tape.layer_norm(out, p.norm2.0, p.norm2.1, LAYER_NORM_EPS)?, weights))
}

/// Dot-product attention over time with the last timestep as the query.
/// Returns the pooled `[B × d]` output and the `[B × T]` weights.
pub fn attention_pool<F: Real>(
    tape: &mut Tape<F>,
    h: Var,
    query_weight: Option<Var>,
    scaled: bool,
) -> Result<(Var, Var)> {
    let shape = tape.value(h).shape().to_vec();
    let (b, t, d) = (shape[0], shape[1], shape[2]);
    let mut q = tape.select(h, 1, t - 1)?;
    if let Some(w) = query_weight {
        q = tape.matmul(q, w)?;
    }
    let q = tape.reshape(q, vec![b, d, 1])?;
    let mut scores = tape.matmul(h, q)?;
    if scaled {
        scores = tape.scale(scores, 1.0 / (d as f64).sqrt())?;
    }
    let scores = tape.reshape(scores, vec![b, t])?;
    let weights = tape.softmax(scores, 1)?;
    let w3 = tape.reshape(weights, vec![b, 1, t])?;
    let pooled = tape.matmul(w3, h)?;
    Ok((tape.reshape(pooled, vec![b, d])?, weights))
}
