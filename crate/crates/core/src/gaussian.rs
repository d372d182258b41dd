//! Univariate Gaussian primitives shared by every detector: log-density,
//! Kullback-Leibler divergence and moment estimates over a sample window.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest variance a window estimate may report. Flat windows (sensor
/// saturation, quantised signals) would otherwise give infinite log-densities.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Mean and variance of a univariate normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::RejectedInput(format!("mean must be finite, got {mean}")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::RejectedInput(format!(
                "variance must be finite and positive, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    /// Standard normal.
    pub fn standard() -> Self {
        Self { mean: 0.0, variance: 1.0 }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Natural log of the normal density at `x`.
pub fn gaussian_loglik(x: f64, p: &GaussianParams) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::RejectedInput(format!("sample must be finite, got {x}")));
    }
    Ok(loglik_unchecked(x, p))
}

#[inline]
pub(crate) fn loglik_unchecked(x: f64, p: &GaussianParams) -> f64 {
    let d = x - p.mean;
    -0.5 * (2.0 * PI * p.variance).ln() - d * d / (2.0 * p.variance)
}

/// `D_KL(p || q)` for two normals, in nats.
pub fn kl_gaussian(p: &GaussianParams, q: &GaussianParams) -> f64 {
    let d = p.mean - q.mean;
    // ln(sigma_q / sigma_p) written on variances
    let kl = 0.5 * (q.variance / p.variance).ln() + (p.variance + d * d) / (2.0 * q.variance) - 0.5;
    // rounding can produce -1e-17 for identical inputs
    kl.max(0.0)
}

/// `D_KL(p || q) + D_KL(q || p)`. Float addition commutes, so the result is
/// bit-identical under argument swap.
pub fn symmetric_kl(p: &GaussianParams, q: &GaussianParams) -> f64 {
    kl_gaussian(p, q) + kl_gaussian(q, p)
}

/// Sample mean and population variance (divisor `w`) of a window, with the
/// variance floored at [`VARIANCE_FLOOR`].
pub fn window_estimate(samples: &[f64]) -> Result<GaussianParams> {
    let w = samples.len();
    if w < 2 {
        return Err(Error::InsufficientData { needed: 2, got: w });
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::RejectedInput(format!("sample must be finite, got {bad}")));
    }
    let n = w as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(GaussianParams { mean, variance: variance.max(VARIANCE_FLOOR) })
}

/// Sliding-window moment tracker used by the streaming detectors.
///
/// Sums are kept about a shift point that is re-anchored whenever the sums
/// are rebuilt, so long streams with level changes do not lose precision.
#[derive(Debug, Clone)]
pub(crate) struct RollingMoments {
    values: VecDeque<f64>,
    shift: f64,
    sum: f64,
    sum_sq: f64,
    updates: usize,
}

impl RollingMoments {
    pub(crate) fn with_capacity(cap: usize) -> Self {
        Self {
            values: VecDeque::with_capacity(cap),
            shift: 0.0,
            sum: 0.0,
            sum_sq: 0.0,
            updates: 0,
        }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn push(&mut self, x: f64) {
        if self.values.is_empty() {
            self.shift = x;
        }
        let d = x - self.shift;
        self.sum += d;
        self.sum_sq += d * d;
        self.values.push_back(x);
        self.bump();
    }

    pub(crate) fn pop_front(&mut self) -> Option<f64> {
        let x = self.values.pop_front()?;
        let d = x - self.shift;
        self.sum -= d;
        self.sum_sq -= d * d;
        self.bump();
        Some(x)
    }

    fn bump(&mut self) {
        self.updates += 1;
        if self.updates >= 4 * self.values.len().max(64) {
            self.rebuild();
        }
    }

    fn rebuild(&mut self) {
        self.updates = 0;
        self.shift = self.values.front().copied().unwrap_or(0.0);
        let (mut s, mut s2) = (0.0, 0.0);
        for &x in &self.values {
            let d = x - self.shift;
            s += d;
            s2 += d * d;
        }
        self.sum = s;
        self.sum_sq = s2;
    }

    /// Same estimator as [`window_estimate`]; caller guarantees `len() >= 2`.
    pub(crate) fn estimate(&self) -> GaussianParams {
        let n = self.values.len() as f64;
        let m = self.sum / n;
        let variance = (self.sum_sq / n - m * m).max(VARIANCE_FLOOR);
        GaussianParams { mean: self.shift + m, variance }
    }
}
