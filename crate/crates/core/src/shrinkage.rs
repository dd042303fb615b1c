//! Closed-form shrinkage operators: soft thresholding for the `l1` penalty
//! and two log-sum rules used as nonconvex rank surrogates.
//!
//! The scalar log-shrink rule acts on a value `x` given weight `alpha` and
//! offset `eps`: it returns `0` when `|x| <= 2*sqrt(alpha) - eps`, and
//! otherwise the positive stationary point
//! `sign(x) * (l1 + l2) / 2` with `l1 = |x| - eps` and
//! `l2 = sqrt((|x| + eps)^2 - 4*alpha)` of the objective
//! `alpha * ln(t + eps) + 0.5 * (t - |x|)^2`. Applied to the singular values
//! of a matrix it yields [`matrix_log_shrink`].
//!
//! The tensor rule ([`tensor_log_shrink`]) instead minimizes
//! `0.5 * (t - sigma)^2 + lambda * ln(t + eps)` globally over `t >= 0` for
//! every singular value of every Fourier frontal slice; its three guards
//! decide exactly when the interior stationary point beats the boundary
//! `t = 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use crate::tprod::{dft_mode3, dims3, idft_mode3, thin_svd_complex, thin_svd_real};

/// Singular values below this fraction of the largest one are treated as
/// exactly zero before any shrinkage rule is applied.
const SIGMA_FLOOR_REL: f64 = 1e-14;

/// Parameters of the scalar log-shrink rule.
///
/// `eps = 0` is allowed: the closed-form operator never evaluates a
/// logarithm, and extends continuously to a zero offset (only the log-sum
/// *objective* requires `eps > 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogShrinkParams {
    alpha: f64,
    eps: f64,
}

impl LogShrinkParams {
    /// Builds parameters, requiring finite `alpha >= 0` and `eps >= 0`.
    pub fn new(alpha: f64, eps: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "log-shrink weight alpha must be finite and >= 0, got {alpha}"
            )));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::invalid(format!(
                "log-shrink offset eps must be finite and >= 0, got {eps}"
            )));
        }
        Ok(LogShrinkParams { alpha, eps })
    }

    /// Penalty weight.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Logarithm offset.
    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Soft threshold: shrinks `x` toward zero by `lambda`, clipping to zero
/// inside `[-lambda, lambda]`. Requires `lambda >= 0` (debug-checked).
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// Scalar log-shrink rule (see module docs). Odd in `x` and never expanding:
/// `|result| <= |x|`.
pub fn log_shrink_scalar(x: f64, params: LogShrinkParams) -> f64 {
    let (alpha, eps) = (params.alpha, params.eps);
    let ax = x.abs();
    if ax <= 2.0 * alpha.sqrt() - eps {
        return 0.0;
    }
    let l1 = ax - eps;
    let l2 = ((ax + eps) * (ax + eps) - 4.0 * alpha).sqrt();
    let t = 0.5 * (l1 + l2);
    // Past the threshold the radicand is nonnegative, but for alpha < eps^2/4
    // the threshold is negative and the "stationary point" can come out
    // below zero, meaning the objective has no interior stationary point;
    // the minimizer is then the boundary t = 0.
    if t <= 0.0 {
        return 0.0;
    }
    x.signum() * t
}

/// Applies the scalar log-shrink rule to the singular values of a matrix
/// (given as a 2-order tensor) and reconstructs: `U diag(D(sigma)) V^T`.
pub fn matrix_log_shrink(y: &DenseTensor, params: LogShrinkParams) -> Result<DenseTensor> {
    if y.order() != 2 {
        return Err(Error::invalid(format!(
            "matrix log-shrink expects a 2-order tensor, got order {}",
            y.order()
        )));
    }
    let (rows, cols) = (y.dims()[0], y.dims()[1]);
    let m = DMatrix::from_column_slice(rows, cols, y.data());
    let (mut u, sigma, v) = thin_svd_real(m)?;
    let shrunk = floor_and_map(&sigma, |s| log_shrink_scalar(s, params));
    for (j, &s) in shrunk.iter().enumerate() {
        u.column_mut(j).scale_mut(s);
    }
    let res = u * v.transpose();
    DenseTensor::new(vec![rows, cols], res.as_slice().to_vec())
}

/// Per-singular-value rule of the tensor log shrinkage: the global minimizer
/// over `t >= 0` of `0.5 * (t - sigma)^2 + lambda * ln(t + eps)`.
///
/// With `delta = (sigma + eps)^2 - 4*lambda` the interior candidate is
/// `t = (sqrt(delta) + sigma - eps) / 2`; it is returned exactly when all
/// three guards hold: `delta > 0`, `sqrt(delta) > eps - sigma`, and
/// `sigma^2 > 2*phi` where
/// `phi = (sqrt(delta) - sigma - eps)^2 / 8
///        + lambda * ln((sigma + sqrt(delta) + eps) / (2*eps))`.
/// The last guard is precisely the comparison of the objective at the
/// candidate against the boundary `t = 0`; otherwise the result is `0`.
fn tensor_shrink_sigma(sigma: f64, lambda: f64, eps: f64) -> f64 {
    let delta = (sigma + eps) * (sigma + eps) - 4.0 * lambda;
    if delta <= 0.0 {
        return 0.0;
    }
    let sd = delta.sqrt();
    if sd <= eps - sigma {
        return 0.0;
    }
    let phi = 0.125 * (sd - sigma - eps) * (sd - sigma - eps)
        + lambda * ((sigma + sd + eps) / (2.0 * eps)).ln();
    if sigma * sigma <= 2.0 * phi {
        return 0.0;
    }
    0.5 * (sd + sigma - eps)
}

/// Log shrinkage of a 3-order tensor in the Fourier domain: every frontal
/// slice of the mode-3 DFT has its singular values replaced by the global
/// minimizer rule [`tensor_shrink_sigma`], slices are rebuilt as
/// `U diag(sigma') V^H`, and the result is transformed back. Conjugate
/// symmetry is preserved by construction (only slices `0..=I3/2` are
/// decomposed; the rest are conjugate mirrors), so the output is real.
///
/// Requires `lambda >= 0` and `eps > 0` (the boundary-comparison guard
/// evaluates a logarithm with `eps` in the denominator).
pub fn tensor_log_shrink(a: &DenseTensor, lambda: f64, eps: f64) -> Result<DenseTensor> {
    let [i1, i2, i3] = dims3(a)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!(
            "tensor log-shrink weight lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!(
            "tensor log-shrink offset eps must be finite and > 0, got {eps}"
        )));
    }
    let af = dft_mode3(a)?;
    let mut bf = crate::tprod::ComplexTensor3::zeros(i1, i2, i3);
    for s in 0..=i3 / 2 {
        let (mut u, sigma, v) = thin_svd_complex(af.slice(s))?;
        let shrunk = floor_and_map(&sigma, |x| tensor_shrink_sigma(x, lambda, eps));
        for (j, &val) in shrunk.iter().enumerate() {
            u.column_mut(j).scale_mut(val);
        }
        bf.set_slice(s, &(u * v.adjoint()));
    }
    for s in (i3 / 2 + 1)..i3 {
        bf.copy_conj_slice(s, i3 - s);
    }
    idft_mode3(&bf)
}

/// Zeroes singular values below `SIGMA_FLOOR_REL` times the largest one,
/// then maps the rule over the rest. Input must be sorted descending.
fn floor_and_map(sigma: &[f64], rule: impl Fn(f64) -> f64) -> Vec<f64> {
    let floor = sigma.first().copied().unwrap_or(0.0) * SIGMA_FLOOR_REL;
    sigma
        .iter()
        .map(|&s| if s <= floor { 0.0 } else { rule(s) })
        .collect()
}
