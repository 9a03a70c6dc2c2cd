//! Reverse-mode differentiation over a linear operation tape.
//!
//! Every operation appends a node holding its output value and enough saved
//! state to run its vector-Jacobian product. Nodes are appended in evaluation
//! order, so the tape is already topologically sorted and `backward` is a
//! single reverse sweep.

use crate::error::{Result, TensorError};
use crate::ops::{self, LayerNormCache, MatmulDims};
use crate::real::Real;
use crate::tensor::{numel, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<F: Real> {
    Leaf,
    MatMul {
        a: Var,
        b: Var,
        dims: MatmulDims,
    },
    Add {
        a: Var,
        b: Var,
    },
    /// `b` repeats over the leading axes of `a`.
    AddBroadcast {
        a: Var,
        b: Var,
    },
    Mul {
        a: Var,
        b: Var,
    },
    Scale {
        a: Var,
        k: F,
    },
    Relu {
        a: Var,
    },
    Softmax {
        a: Var,
        outer: usize,
        len: usize,
        inner: usize,
    },
    LayerNorm {
        x: Var,
        gamma: Var,
        cache: LayerNormCache<F>,
    },
    Gather {
        a: Var,
        index: Vec<usize>,
    },
    Reshape {
        a: Var,
    },
    Sum {
        a: Var,
    },
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<F>,
    },
}

struct Node<F: Real> {
    value: Tensor<F>,
    op: Op<F>,
    needs_grad: bool,
}

pub struct Tape<F: Real = f32> {
    nodes: Vec<Node<F>>,
    check_finite: bool,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            check_finite: false,
        }
    }

    /// Fails any operation whose output contains NaN or ±Inf.
    pub fn with_finite_check(mut self, on: bool) -> Self {
        self.check_finite = on;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a leaf. It participates in differentiation iff
    /// `t.requires_grad`.
    pub fn leaf(&mut self, t: Tensor<F>) -> Var {
        let needs_grad = t.requires_grad;
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, mut t: Tensor<F>) -> Var {
        t.requires_grad = false;
        self.leaf(t)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient of a differentiable leaf, if `backward` reached it.
    pub fn grad(&self, v: Var) -> Option<&[F]> {
        self.nodes[v.0].value.grad.as_deref()
    }

    /// Clears every leaf gradient accumulator.
    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.value.grad = None;
        }
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, inputs: &[Var], name: &'static str) -> Result<Var> {
        if self.check_finite {
            value.check_finite(name)?;
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value, op, needs_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (dims, shape) = ops::matmul_dims(self.shape(a), self.shape(b))?;
        let out = ops::matmul_raw(self.value(a).data(), self.value(b).data(), dims);
        self.push(Tensor::new(shape, out)?, Op::MatMul { a, b, dims }, &[a, b], "matmul")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::Shape {
                op: "add",
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        let data = zip_map(self.value(a).data(), self.value(b).data(), |x, y| x + y);
        let shape = self.shape(a).to_vec();
        self.push(Tensor::new(shape, data)?, Op::Add { a, b }, &[a, b], "add")
    }

    /// `a + b` where `b`'s shape equals a trailing slice of `a`'s shape.
    pub fn add_broadcast(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sb.len() > sa.len() || sa[sa.len() - sb.len()..] != *sb {
            return Err(TensorError::Shape {
                op: "add_broadcast",
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        let bd = self.value(b).data();
        let nb = bd.len();
        let data = self
            .value(a)
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + bd[i % nb])
            .collect();
        let shape = sa.to_vec();
        self.push(
            Tensor::new(shape, data)?,
            Op::AddBroadcast { a, b },
            &[a, b],
            "add_broadcast",
        )
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::Shape {
                op: "mul",
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        let data = zip_map(self.value(a).data(), self.value(b).data(), |x, y| x * y);
        let shape = self.shape(a).to_vec();
        self.push(Tensor::new(shape, data)?, Op::Mul { a, b }, &[a, b], "mul")
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let k = F::from_f64(k);
        let data = self.value(a).data().iter().map(|&x| x * k).collect();
        let shape = self.shape(a).to_vec();
        self.push(Tensor::new(shape, data)?, Op::Scale { a, k }, &[a], "scale")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = ops::relu(self.value(a));
        self.push(out, Op::Relu { a }, &[a], "relu")
    }

    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let out = ops::softmax(self.value(a), axis)?;
        let (outer, len, inner) = ops::axis_extents(self.shape(a), axis);
        self.push(out, Op::Softmax { a, outer, len, inner }, &[a], "softmax")
    }

    /// Layer normalization over the last axis with affine `gamma`, `beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let d = ops::check_layer_norm_shapes(self.value(x), self.value(gamma), self.value(beta), eps)?;
        let zero_beta = vec![F::zero(); d];
        let (y, cache) = ops::layer_norm_raw(
            self.value(x).data(),
            self.value(gamma).data(),
            &zero_beta,
            d,
            F::from_f64(eps),
        );
        let shape = self.shape(x).to_vec();
        let scaled = self.push(
            Tensor::new(shape, y)?,
            Op::LayerNorm { x, gamma, cache },
            &[x, gamma],
            "layer_norm",
        )?;
        // beta is recorded as a separate broadcast add.
        let bd = self.value(beta).data();
        let data = self
            .value(scaled)
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| v + bd[i % d])
            .collect();
        let shape = self.shape(x).to_vec();
        self.push(
            Tensor::new(shape, data)?,
            Op::AddBroadcast { a: scaled, b: beta },
            &[scaled, beta],
            "layer_norm",
        )
    }

    /// `out[i] = a.flat[index[i]]`, reshaped to `shape`.
    pub fn gather(&mut self, a: Var, index: Vec<usize>, shape: Vec<usize>) -> Result<Var> {
        let src = self.value(a).data();
        if let Some(&bad) = index.iter().find(|&&i| i >= src.len()) {
            return Err(TensorError::Index {
                op: "gather",
                index: bad,
                len: src.len(),
            });
        }
        let data = index.iter().map(|&i| src[i]).collect();
        let t = Tensor::new(shape, data)?;
        self.push(t, Op::Gather { a, index }, &[a], "gather")
    }

    /// Reorders axes: output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, a: Var, perm: &[usize]) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let mut seen = vec![false; shape.len()];
        if perm.len() != shape.len()
            || perm
                .iter()
                .any(|&p| p >= shape.len() || std::mem::replace(&mut seen[p], true))
        {
            return Err(TensorError::InvalidShape {
                op: "permute",
                msg: format!("{perm:?} is not a permutation of the axes of {shape:?}"),
            });
        }
        let in_strides = strides(&shape);
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let mut index = Vec::with_capacity(numel(&shape));
        let mut counter = vec![0usize; shape.len()];
        for _ in 0..numel(&shape) {
            let off: usize = counter.iter().zip(perm).map(|(&c, &p)| c * in_strides[p]).sum();
            index.push(off);
            for ax in (0..counter.len()).rev() {
                counter[ax] += 1;
                if counter[ax] < out_shape[ax] {
                    break;
                }
                counter[ax] = 0;
            }
        }
        self.gather(a, index, out_shape)
    }

    /// Swaps the last two axes.
    pub fn transpose_last2(&mut self, a: Var) -> Result<Var> {
        let r = self.shape(a).len();
        if r < 2 {
            return Err(TensorError::InvalidShape {
                op: "transpose",
                msg: format!("need rank >= 2, got {:?}", self.shape(a)),
            });
        }
        let mut perm: Vec<usize> = (0..r).collect();
        perm.swap(r - 2, r - 1);
        self.permute(a, &perm)
    }

    /// Picks position `idx` along `axis`, dropping that axis.
    pub fn select(&mut self, a: Var, axis: usize, idx: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() || idx >= shape[axis] {
            return Err(TensorError::Index {
                op: "select",
                index: idx,
                len: shape.get(axis).copied().unwrap_or(0),
            });
        }
        let (outer, len, inner) = ops::axis_extents(&shape, axis);
        let mut index = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                index.push(o * len * inner + idx * inner + i);
            }
        }
        let mut out_shape = shape;
        out_shape.remove(axis);
        if out_shape.is_empty() {
            out_shape.push(1);
        }
        self.gather(a, index, out_shape)
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let t = self.value(a).clone();
        let mut t = t.reshape(shape)?;
        t.grad = None;
        t.requires_grad = false;
        self.push(t, Op::Reshape { a }, &[a], "reshape")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().fold(F::zero(), |s, &x| s + x);
        self.push(Tensor::scalar(s), Op::Sum { a }, &[a], "sum")
    }

    /// Mean cross-entropy of `[batch × classes]` logits against `labels`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let shape = self.shape(logits).to_vec();
        if shape.len() != 2 {
            return Err(TensorError::InvalidShape {
                op: "cross_entropy",
                msg: format!("logits must be [batch, classes], got {shape:?}"),
            });
        }
        ops::check_labels(labels, shape[0], shape[1])?;
        let (loss, probs) = ops::cross_entropy_raw(self.value(logits).data(), labels, shape[1]);
        self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            &[logits],
            "cross_entropy",
        )
    }

    /// Accumulates `d loss / d leaf` into every differentiable leaf.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(TensorError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<F>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![F::one()]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.nodes[i].needs_grad {
                continue;
            }
            let nodes = &self.nodes;
            let want = |v: Var| nodes[v.0].needs_grad;
            match &nodes[i].op {
                Op::Leaf => {}
                Op::MatMul { a, b, dims } => {
                    let MatmulDims {
                        groups,
                        m,
                        k,
                        n,
                        shared_b,
                    } = *dims;
                    let (av, bv) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    if want(*a) {
                        let ga = slot(&mut grads, *a, av.len());
                        for gi in 0..groups {
                            let bs = if shared_b {
                                bv
                            } else {
                                &bv[gi * k * n..(gi + 1) * k * n]
                            };
                            ops::gemm_grad_a(
                                &g[gi * m * n..(gi + 1) * m * n],
                                bs,
                                &mut ga[gi * m * k..(gi + 1) * m * k],
                                m,
                                k,
                                n,
                            );
                        }
                    }
                    if want(*b) {
                        let gb = slot(&mut grads, *b, bv.len());
                        for gi in 0..groups {
                            let gbs = if shared_b {
                                &mut gb[..]
                            } else {
                                &mut gb[gi * k * n..(gi + 1) * k * n]
                            };
                            ops::gemm_grad_b(
                                &av[gi * m * k..(gi + 1) * m * k],
                                &g[gi * m * n..(gi + 1) * m * n],
                                gbs,
                                m,
                                k,
                                n,
                            );
                        }
                    }
                }
                Op::Add { a, b } => {
                    for v in [*a, *b] {
                        if want(v) {
                            add_into(slot(&mut grads, v, g.len()), &g);
                        }
                    }
                }
                Op::AddBroadcast { a, b } => {
                    if want(*a) {
                        add_into(slot(&mut grads, *a, g.len()), &g);
                    }
                    if want(*b) {
                        let nb = nodes[b.0].value.numel();
                        let gb = slot(&mut grads, *b, nb);
                        for (j, &x) in g.iter().enumerate() {
                            gb[j % nb] = gb[j % nb] + x;
                        }
                    }
                }
                Op::Mul { a, b } => {
                    let (av, bv) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    if want(*a) {
                        let ga = slot(&mut grads, *a, g.len());
                        for j in 0..g.len() {
                            ga[j] = ga[j] + g[j] * bv[j];
                        }
                    }
                    if want(*b) {
                        let gb = slot(&mut grads, *b, g.len());
                        for j in 0..g.len() {
                            gb[j] = gb[j] + g[j] * av[j];
                        }
                    }
                }
                Op::Scale { a, k } => {
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] = ga[j] + g[j] * *k;
                    }
                }
                Op::Relu { a } => {
                    let av = nodes[a.0].value.data();
                    let ga = slot(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        if av[j] > F::zero() {
                            ga[j] = ga[j] + g[j];
                        }
                    }
                }
                Op::Softmax { a, outer, len, inner } => {
                    let y = nodes[i].value.data();
                    let ga = slot(&mut grads, *a, g.len());
                    for o in 0..*outer {
                        for q in 0..*inner {
                            let at = |j: usize| o * len * inner + j * inner + q;
                            let dot = (0..*len).fold(F::zero(), |s, j| s + g[at(j)] * y[at(j)]);
                            for j in 0..*len {
                                ga[at(j)] = ga[at(j)] + y[at(j)] * (g[at(j)] - dot);
                            }
                        }
                    }
                }
                Op::LayerNorm { x, gamma, cache } => {
                    let d = nodes[gamma.0].value.numel();
                    let gam = nodes[gamma.0].value.data();
                    let rows = g.len() / d;
                    if want(*gamma) {
                        let gg = slot(&mut grads, *gamma, d);
                        for r in 0..rows {
                            for j in 0..d {
                                gg[j] = gg[j] + g[r * d + j] * cache.xhat[r * d + j];
                            }
                        }
                    }
                    if want(*x) {
                        let gx = slot(&mut grads, *x, g.len());
                        let df = F::from_f64(d as f64);
                        for r in 0..rows {
                            let xh = &cache.xhat[r * d..(r + 1) * d];
                            let mut s1 = F::zero();
                            let mut s2 = F::zero();
                            for j in 0..d {
                                let dxh = g[r * d + j] * gam[j];
                                s1 = s1 + dxh;
                                s2 = s2 + dxh * xh[j];
                            }
                            let scale = cache.inv_std[r] / df;
                            for j in 0..d {
                                let dxh = g[r * d + j] * gam[j];
                                gx[r * d + j] = gx[r * d + j] + scale * (df * dxh - s1 - xh[j] * s2);
                            }
                        }
                    }
                }
                Op::Gather { a, index } => {
                    let na = nodes[a.0].value.numel();
                    let ga = slot(&mut grads, *a, na);
                    for (j, &src) in index.iter().enumerate() {
                        ga[src] = ga[src] + g[j];
                    }
                }
                Op::Reshape { a } => add_into(slot(&mut grads, *a, g.len()), &g),
                Op::Sum { a } => {
                    let na = nodes[a.0].value.numel();
                    let ga = slot(&mut grads, *a, na);
                    ga.iter_mut().for_each(|x| *x = *x + g[0]);
                }
                Op::CrossEntropy { logits, labels, probs } => {
                    let classes = probs.len() / labels.len();
                    let scale = g[0] / F::from_f64(labels.len() as f64);
                    let gl = slot(&mut grads, *logits, probs.len());
                    for (b, &label) in labels.iter().enumerate() {
                        for c in 0..classes {
                            let onehot = if c == label { F::one() } else { F::zero() };
                            let j = b * classes + c;
                            gl[j] = gl[j] + (probs[j] - onehot) * scale;
                        }
                    }
                }
            }
            if matches!(self.nodes[i].op, Op::Leaf) {
                self.nodes[i].value.accumulate_grad(&g)?;
            }
        }
        Ok(())
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

fn zip_map<F: Real>(a: &[F], b: &[F], f: impl Fn(F, F) -> F) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn slot<F: Real>(grads: &mut [Option<Vec<F>>], v: Var, len: usize) -> &mut Vec<F> {
    grads[v.0].get_or_insert_with(|| vec![F::zero(); len])
}

fn add_into<F: Real>(acc: &mut [F], g: &[F]) {
    acc.iter_mut().zip(g).for_each(|(a, &b)| *a = *a + b);
}
