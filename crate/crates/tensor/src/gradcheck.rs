//! Central finite differences, the oracle for checking tape gradients.
//!
//! Only forward evaluations are used here, never the tape's backward pass.

use crate::real::Real;

/// Step for coordinate `x`: `rel_step · max(1, |x|)`.
pub fn step_size(x: f64, rel_step: f64) -> f64 {
    rel_step * x.abs().max(1.0)
}

/// Central-difference gradient of `f` at `x`.
///
/// Perturbations are applied in the storage type `F`; the divisor is the
/// step actually realized after rounding.
pub fn central_difference<F: Real>(mut f: impl FnMut(&[F]) -> F, x: &[F], rel_step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = x[i];
        let h = F::from_f64(step_size(xi.as_f64(), rel_step));
        let (hi, lo) = (xi + h, xi - h);
        probe[i] = hi;
        let fp = f(&probe).as_f64();
        probe[i] = lo;
        let fm = f(&probe).as_f64();
        probe[i] = xi;
        out.push((fp - fm) / (hi.as_f64() - lo.as_f64()));
    }
    out
}

/// `‖a − n‖₂ / max(‖a‖₂, ‖n‖₂)`, or 0 when both vectors vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
