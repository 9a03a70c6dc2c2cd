use crate::error::{Result, TensorError};
use crate::real::Real;
use crate::tensor::Tensor;

/// Adam moments and hyperparameters for an ordered list of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F: Real = f32> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Completed update count.
    pub t: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> AdamState<F> {
    /// Zero moments shaped after `params`.
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<F>>, lr: f64) -> Self {
        let (m, v): (Vec<_>, Vec<_>) = params
            .into_iter()
            .map(|p| (vec![F::zero(); p.numel()], vec![F::zero(); p.numel()]))
            .unzip();
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m,
            v,
        }
    }

    pub fn first_moments(&self) -> &[Vec<F>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<F>] {
        &self.v
    }
}

/// One bias-corrected Adam update of `params` with `grads`.
pub fn adam_step<F: Real>(params: &mut [&mut Tensor<F>], grads: &[&[F]], state: &mut AdamState<F>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(TensorError::Shape {
            op: "adam_step",
            lhs: vec![params.len()],
            rhs: vec![grads.len(), state.m.len()],
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.numel() != g.len() || p.numel() != state.m[i].len() {
            return Err(TensorError::Shape {
                op: "adam_step",
                lhs: p.shape().to_vec(),
                rhs: vec![g.len()],
            });
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bc1 = F::from_f64(1.0 - b1.powi(t));
    let bc2 = F::from_f64(1.0 - b2.powi(t));
    let (b1, b2) = (F::from_f64(b1), F::from_f64(b2));
    let one = F::one();
    let lr = F::from_f64(state.lr);
    let eps = F::from_f64(state.eps);

    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for (j, w) in p.data_mut().iter_mut().enumerate() {
            let gj = g[j];
            m[j] = b1 * m[j] + (one - b1) * gj;
            v[j] = b2 * v[j] + (one - b2) * gj * gj;
            let mhat = m[j] / bc1;
            let vhat = v[j] / bc2;
            *w = *w - lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
