//! Forward kernels shared by the tape and by gradient-free callers.
//!
//! Reductions always run sequentially along the reduced axis so results are
//! bit-reproducible.

use crate::error::{Result, TensorError};
use crate::real::Real;
use crate::tensor::{numel, Tensor};

/// Decomposition of a shape around `axis` into (outer, len, inner) extents.
pub(crate) fn axis_extents(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = numel(&shape[..axis]);
    let inner = numel(&shape[axis + 1..]);
    (outer, shape[axis], inner)
}

/// Matrix-product geometry: `groups` independent `[m×k]·[k×n]` products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct MatmulDims {
    pub groups: usize,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// `b` is one shared `[k×n]` matrix rather than one per group.
    pub shared_b: bool,
}

pub(crate) fn matmul_dims(a: &[usize], b: &[usize]) -> Result<(MatmulDims, Vec<usize>)> {
    let mismatch = || TensorError::Shape {
        op: "matmul",
        lhs: a.to_vec(),
        rhs: b.to_vec(),
    };
    if a.len() < 2 || !(b.len() == 2 || b.len() == a.len()) {
        return Err(mismatch());
    }
    let k = a[a.len() - 1];
    if b.len() == 2 {
        // Leading axes of `a` fold into rows: [.., m, k] x [k, n].
        if b[0] != k {
            return Err(mismatch());
        }
        let m = numel(&a[..a.len() - 1]);
        let mut out = a[..a.len() - 1].to_vec();
        out.push(b[1]);
        return Ok((
            MatmulDims {
                groups: 1,
                m,
                k,
                n: b[1],
                shared_b: true,
            },
            out,
        ));
    }
    let batch = &a[..a.len() - 2];
    if batch != &b[..b.len() - 2] || b[b.len() - 2] != k {
        return Err(mismatch());
    }
    let m = a[a.len() - 2];
    let n = b[b.len() - 1];
    let mut out = batch.to_vec();
    out.extend([m, n]);
    Ok((
        MatmulDims {
            groups: numel(batch),
            m,
            k,
            n,
            shared_b: false,
        },
        out,
    ))
}

/// `c[i][j] = Σ_p a[i][p]·b[p][j]`, accumulated in increasing `p`.
pub(crate) fn gemm<F: Real>(a: &[F], b: &[F], c: &mut [F], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut c[i * n..(i + 1) * n];
        row.iter_mut().for_each(|x| *x = F::zero());
        for p in 0..k {
            let aip = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            for (cj, &bj) in row.iter_mut().zip(brow) {
                *cj = *cj + aip * bj;
            }
        }
    }
}

/// `da += dc · bᵀ`, computed as row updates against an explicit transpose of
/// `b` so the inner loop is a contiguous axpy.
pub(crate) fn gemm_grad_a<F: Real>(dc: &[F], b: &[F], da: &mut [F], m: usize, k: usize, n: usize) {
    let mut bt = vec![F::zero(); n * k];
    for p in 0..k {
        for j in 0..n {
            bt[j * k + p] = b[p * n + j];
        }
    }
    for i in 0..m {
        let darow = &mut da[i * k..(i + 1) * k];
        for j in 0..n {
            let g = dc[i * n + j];
            let btrow = &bt[j * k..(j + 1) * k];
            for (d, &x) in darow.iter_mut().zip(btrow) {
                *d = *d + g * x;
            }
        }
    }
}

/// `db += aᵀ · dc`
pub(crate) fn gemm_grad_b<F: Real>(a: &[F], dc: &[F], db: &mut [F], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let dcrow = &dc[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            let dbrow = &mut db[p * n..(p + 1) * n];
            for (d, &g) in dbrow.iter_mut().zip(dcrow) {
                *d = *d + aip * g;
            }
        }
    }
}

pub(crate) fn matmul_raw<F: Real>(a: &[F], b: &[F], d: MatmulDims) -> Vec<F> {
    let MatmulDims {
        groups,
        m,
        k,
        n,
        shared_b,
    } = d;
    let mut c = vec![F::zero(); groups * m * n];
    for g in 0..groups {
        let bs = if shared_b { b } else { &b[g * k * n..(g + 1) * k * n] };
        gemm(
            &a[g * m * k..(g + 1) * m * k],
            bs,
            &mut c[g * m * n..(g + 1) * m * n],
            m,
            k,
            n,
        );
    }
    c
}

/// Matrix product. Accepts `[m×k]·[k×n]`, batched `[..×m×k]·[..×k×n]`, and
/// `[..×k]·[k×n]` where every leading row of `a` shares `b`.
pub fn matmul<F: Real>(a: &Tensor<F>, b: &Tensor<F>) -> Result<Tensor<F>> {
    let (dims, shape) = matmul_dims(a.shape(), b.shape())?;
    Tensor::new(shape, matmul_raw(a.data(), b.data(), dims))
}

pub(crate) fn softmax_raw<F: Real>(x: &[F], outer: usize, len: usize, inner: usize) -> Vec<F> {
    let mut y = vec![F::zero(); x.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |j: usize| o * len * inner + j * inner + i;
            let mut max = F::neg_infinity();
            for j in 0..len {
                max = max.max(x[at(j)]);
            }
            let mut sum = F::zero();
            for j in 0..len {
                let e = (x[at(j)] - max).exp();
                y[at(j)] = e;
                sum = sum + e;
            }
            for j in 0..len {
                y[at(j)] = y[at(j)] / sum;
            }
        }
    }
    y
}

/// Softmax along `axis`, computed after subtracting the axis maximum.
pub fn softmax<F: Real>(x: &Tensor<F>, axis: usize) -> Result<Tensor<F>> {
    if axis >= x.rank() {
        return Err(TensorError::InvalidShape {
            op: "softmax",
            msg: format!("axis {axis} out of range for shape {:?}", x.shape()),
        });
    }
    let (outer, len, inner) = axis_extents(x.shape(), axis);
    Tensor::new(x.shape().to_vec(), softmax_raw(x.data(), outer, len, inner))
}

pub fn relu<F: Real>(x: &Tensor<F>) -> Tensor<F> {
    let data = x.data().iter().map(|&v| v.max(F::zero())).collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// Normalized values and reciprocal standard deviations per row.
pub(crate) struct LayerNormCache<F> {
    pub xhat: Vec<F>,
    pub inv_std: Vec<F>,
}

pub(crate) fn layer_norm_raw<F: Real>(
    x: &[F],
    gamma: &[F],
    beta: &[F],
    d: usize,
    eps: F,
) -> (Vec<F>, LayerNormCache<F>) {
    let rows = x.len() / d;
    let mut y = vec![F::zero(); x.len()];
    let mut xhat = vec![F::zero(); x.len()];
    let mut inv_std = vec![F::zero(); rows];
    let inv_d = F::one() / F::from_f64(d as f64);
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let mean = row.iter().fold(F::zero(), |s, &v| s + v) * inv_d;
        let var = row.iter().fold(F::zero(), |s, &v| s + (v - mean) * (v - mean)) * inv_d;
        let is = F::one() / (var + eps).sqrt();
        inv_std[r] = is;
        for j in 0..d {
            let h = (row[j] - mean) * is;
            xhat[r * d + j] = h;
            y[r * d + j] = gamma[j] * h + beta[j];
        }
    }
    (y, LayerNormCache { xhat, inv_std })
}

pub(crate) fn check_layer_norm_shapes<F: Real>(
    x: &Tensor<F>,
    gamma: &Tensor<F>,
    beta: &Tensor<F>,
    eps: f64,
) -> Result<usize> {
    let d = x.last_dim();
    for p in [gamma, beta] {
        if p.shape() != [d] {
            return Err(TensorError::Shape {
                op: "layer_norm",
                lhs: x.shape().to_vec(),
                rhs: p.shape().to_vec(),
            });
        }
    }
    if !(eps > 0.0) {
        return Err(TensorError::Contract(format!(
            "layer_norm: eps must be positive, got {eps}"
        )));
    }
    Ok(d)
}

/// Normalizes over the last axis, then applies `gamma * x̂ + beta`.
pub fn layer_norm<F: Real>(x: &Tensor<F>, gamma: &Tensor<F>, beta: &Tensor<F>, eps: f64) -> Result<Tensor<F>> {
    let d = check_layer_norm_shapes(x, gamma, beta, eps)?;
    let (y, _) = layer_norm_raw(x.data(), gamma.data(), beta.data(), d, F::from_f64(eps));
    Tensor::new(x.shape().to_vec(), y)
}

pub(crate) fn check_labels(labels: &[usize], batch: usize, classes: usize) -> Result<()> {
    if labels.len() != batch {
        return Err(TensorError::Shape {
            op: "cross_entropy",
            lhs: vec![batch, classes],
            rhs: vec![labels.len()],
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(TensorError::Index {
            op: "cross_entropy",
            index: bad,
            len: classes,
        });
    }
    Ok(())
}

/// Returns the mean loss and the row softmax probabilities.
pub(crate) fn cross_entropy_raw<F: Real>(logits: &[F], labels: &[usize], classes: usize) -> (F, Vec<F>) {
    let batch = labels.len();
    let probs = softmax_raw(logits, batch, classes, 1);
    let mut total = F::zero();
    for (b, &label) in labels.iter().enumerate() {
        let row = &logits[b * classes..(b + 1) * classes];
        let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        let lse = row.iter().fold(F::zero(), |s, &v| s + (v - max).exp()).ln() + max;
        total = total + (lse - row[label]);
    }
    (total / F::from_f64(batch as f64), probs)
}

/// Mean negative log-likelihood of `labels` under `softmax(logits)`.
pub fn cross_entropy<F: Real>(logits: &Tensor<F>, labels: &[usize]) -> Result<F> {
    if logits.rank() != 2 {
        return Err(TensorError::InvalidShape {
            op: "cross_entropy",
            msg: format!("logits must be [batch, classes], got {:?}", logits.shape()),
        });
    }
    let (batch, classes) = (logits.shape()[0], logits.shape()[1]);
    check_labels(labels, batch, classes)?;
    Ok(cross_entropy_raw(logits.data(), labels, classes).0)
}

/// Index of the largest entry in each row of a `[rows × cols]` buffer; ties
/// resolve to the lowest index.
pub fn argmax_rows<F: Real>(x: &[F], cols: usize) -> Vec<usize> {
    x.chunks(cols)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
