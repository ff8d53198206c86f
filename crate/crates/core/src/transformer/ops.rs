//! Numeric kernels for the forward pass.
//!
//! All values are stored as `f32`; every reduction (dot products, softmax
//! sums, the RMS mean) accumulates in `f64` and rounds once on output.
//! The exact recipes are part of the crate contract — reference
//! implementations in the test suite reproduce them bit for bit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpsError {
    #[error("length mismatch: input {input}, weight {weight}")]
    LengthMismatch { input: usize, weight: usize },
    #[error("eps must be positive, got {0}")]
    BadEps(f64),
    #[error("NaN in softmax input")]
    NanInput,
}

/// RMS normalization: `out_j = weight_j * x_j / sqrt(mean(x^2) + eps)`.
///
/// The mean accumulates in `f64`; each output value is computed in `f64`
/// and rounded once to `f32`.
pub fn rmsnorm(x: &[f32], weight: &[f32], eps: f64) -> Result<Vec<f32>, OpsError> {
    if x.len() != weight.len() {
        return Err(OpsError::LengthMismatch {
            input: x.len(),
            weight: weight.len(),
        });
    }
    if !(eps > 0.0) {
        return Err(OpsError::BadEps(eps));
    }
    Ok(rmsnorm_unchecked(x, weight, eps))
}

pub(crate) fn rmsnorm_unchecked(x: &[f32], weight: &[f32], eps: f64) -> Vec<f32> {
    debug_assert_eq!(x.len(), weight.len());
    let mut ss = 0.0f64;
    for &v in x {
        ss += (v as f64) * (v as f64);
    }
    let mean = ss / x.len() as f64;
    let scale = 1.0 / (mean + eps).sqrt();
    x.iter()
        .zip(weight)
        .map(|(&v, &w)| ((v as f64) * scale * (w as f64)) as f32)
        .collect()
}

/// Numerically stable softmax: subtracts the max, exponentiates in `f64`,
/// normalizes by an `f64` sum. Errors on NaN input; infinities are rejected
/// too since they poison the shift.
pub fn stable_softmax(logits: &[f32]) -> Result<Vec<f32>, OpsError> {
    if logits.iter().any(|v| v.is_nan()) {
        return Err(OpsError::NanInput);
    }
    Ok(softmax_unchecked(logits))
}

pub(crate) fn softmax_unchecked(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut exps = Vec::with_capacity(logits.len());
    let mut sum = 0.0f64;
    for &v in logits {
        let e = ((v as f64) - (max as f64)).exp();
        sum += e;
        exps.push(e);
    }
    exps.into_iter().map(|e| (e / sum) as f32).collect()
}

/// Row-vector times matrix: `out[j] = sum_i x[i] * w[i][j]` for a row-major
/// `w` of shape `[x.len() x cols]`, accumulated in `f64`.
pub(crate) fn matvec(x: &[f32], w: &crate::tensor::Matrix) -> Vec<f32> {
    debug_assert_eq!(x.len(), w.rows());
    let cols = w.cols();
    let mut acc = vec![0.0f64; cols];
    for (i, &xi) in x.iter().enumerate() {
        let xi = xi as f64;
        let row = w.row(i);
        for (a, &wij) in acc.iter_mut().zip(row) {
            *a += xi * (wij as f64);
        }
    }
    acc.into_iter().map(|a| a as f32).collect()
}

/// Dot product with `f64` accumulation.
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        acc += (x as f64) * (y as f64);
    }
    acc
}

/// Applies rotary position embedding in place to one head's slice.
///
/// Adjacent pairs `(x[2i], x[2i+1])` rotate by `pos * theta^(-2i/head_dim)`;
/// a trailing odd element is left untouched. Angles and the rotation are
/// computed in `f64`.
pub(crate) fn rope_in_place(x: &mut [f32], pos: usize, inv_freq: &[f64]) {
    let pos = pos as f64;
    for (i, &f) in inv_freq.iter().enumerate() {
        let (a, b) = (x[2 * i] as f64, x[2 * i + 1] as f64);
        let (sin, cos) = (pos * f).sin_cos();
        x[2 * i] = (a * cos - b * sin) as f32;
        x[2 * i + 1] = (a * sin + b * cos) as f32;
    }
}

/// Per-pair inverse frequencies for a head dimension:
/// `theta^(-2i/head_dim)` for `i in 0..head_dim/2`.
pub(crate) fn rope_inv_freq(head_dim: usize, theta: f64) -> Vec<f64> {
    (0..head_dim / 2)
        .map(|i| theta.powf(-((2 * i) as f64) / head_dim as f64))
        .collect()
}

/// SwiGLU activation: `silu(gate) * up`, evaluated in `f64` per element.
pub(crate) fn silu_mul(gate: &[f32], up: &[f32]) -> Vec<f32> {
    debug_assert_eq!(gate.len(), up.len());
    gate.iter()
        .zip(up)
        .map(|(&g, &u)| {
            let g = g as f64;
            (g / (1.0 + (-g).exp()) * (u as f64)) as f32
        })
        .collect()
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax_f32(xs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax_f64(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}
