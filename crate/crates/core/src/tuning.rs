//! Closed-form tuning of the symmetric detector from a target average run
//! length `gamma`, a change magnitude `s` (symmetric KL divergence, nats) and
//! a future-window length `w`.
//!
//! With equivalence factor `delta0` (the exponent that makes
//! `exp(delta0 * increment)` a unit-mean martingale under the pre-change
//! distribution), the first-order expected detection delay is
//!
//! ```text
//! EDD(delta0) = ln(gamma) / (delta0 * s + ln(1 - delta0^2 / w)) + w
//! ```
//!
//! which is minimised by `delta0* = -1/s + sqrt(1/s^2 + w)`. The matching drift
//! is `v* = -ln(1 - delta0*^2 / w) / delta0*` and the threshold for a target
//! run length is `b = ln(gamma) / delta0`. All asymptotically vanishing terms
//! are dropped.

use crate::error::{Error, Result};

pub const DEFAULT_W_FLOOR: usize = 20;
pub const DEFAULT_W_MAX: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningInputs {
    pub target_arl: f64,
    pub sym_divergence: f64,
    pub window: usize,
}

impl TuningInputs {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.target_arl)?;
        check_s(self.sym_divergence)?;
        check_w(self.window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningOutputs {
    pub delta0: f64,
    pub drift: f64,
    pub threshold: f64,
    pub theoretical_edd: f64,
    pub window_star: usize,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("target ARL must exceed 1, got {gamma}")))
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("symmetric divergence must be positive, got {s}")))
    }
}

fn check_w(w: usize) -> Result<()> {
    if w >= 2 {
        Ok(())
    } else {
        Err(Error::Config(format!("window must be at least 2, got {w}")))
    }
}

/// Equivalence factor minimising the expected detection delay.
/// Always satisfies `delta0^2 < w`.
pub fn delta0_star(s: f64, w: usize) -> Result<f64> {
    check_s(s)?;
    check_w(w)?;
    let inv = 1.0 / s;
    Ok(-inv + (inv * inv + w as f64).sqrt())
}

/// Drift that makes `exp(delta0 * increment)` unit-mean for large `w`.
pub fn v_star(delta0: f64, w: usize) -> Result<f64> {
    check_w(w)?;
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(Error::Domain(format!("delta0 must be positive, got {delta0}")));
    }
    let ratio = delta0 * delta0 / w as f64;
    if ratio >= 1.0 {
        return Err(Error::Domain(format!(
            "delta0^2 = {} must be below the window length {w}",
            delta0 * delta0
        )));
    }
    Ok(-(-ratio).ln_1p() / delta0)
}

/// Threshold giving average run length `gamma` at equivalence factor `delta0`.
pub fn threshold_for_arl(gamma: f64, delta0: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(Error::Domain(format!("delta0 must be positive, got {delta0}")));
    }
    Ok(gamma.ln() / delta0)
}

/// Average run length implied by threshold `b` (inverse of [`threshold_for_arl`]).
pub fn arl_for_threshold(threshold: f64, delta0: f64) -> f64 {
    (delta0 * threshold).exp()
}

/// Delay expression at an arbitrary admissible `delta0` (`0 < delta0^2 < w`
/// and positive denominator). `gamma = 1` is allowed and yields `w`.
pub fn edd_for_delta(gamma: f64, s: f64, w: usize, delta0: f64) -> Result<f64> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("target ARL must be at least 1, got {gamma}")));
    }
    check_s(s)?;
    check_w(w)?;
    let ratio = delta0 * delta0 / w as f64;
    if delta0.is_nan() || delta0 <= 0.0 || ratio >= 1.0 {
        return Err(Error::Domain(format!("delta0 = {delta0} outside (0, sqrt({w}))")));
    }
    let denom = delta0 * s + (-ratio).ln_1p();
    if denom <= 0.0 {
        return Err(Error::Domain(format!("delay denominator {denom} is not positive")));
    }
    Ok(gamma.ln() / denom + w as f64)
}

/// First-order expected detection delay (samples) at the optimal `delta0`.
pub fn edd_theoretical(gamma: f64, s: f64, w: usize) -> Result<f64> {
    let d = delta0_star(s, w)?;
    edd_for_delta(gamma, s, w, d)
}

/// Integer window in `[w_floor, w_max]` minimising [`edd_theoretical`];
/// ties go to the smaller window.
pub fn optimal_window(gamma: f64, s_prime: f64, w_floor: usize, w_max: usize) -> Result<usize> {
    check_gamma(gamma)?;
    check_s(s_prime)?;
    check_w(w_floor)?;
    if w_max <= w_floor {
        return Err(Error::Config(format!("w_max ({w_max}) must exceed w_floor ({w_floor})")));
    }
    let mut best = (f64::INFINITY, w_floor);
    for w in w_floor..=w_max {
        let edd = edd_theoretical(gamma, s_prime, w)?;
        if edd < best.0 {
            best = (edd, w);
        }
    }
    Ok(best.1)
}

/// Full tuning at a fixed window.
pub fn tune(inputs: &TuningInputs) -> Result<TuningOutputs> {
    inputs.validate()?;
    let w = inputs.window;
    let delta0 = delta0_star(inputs.sym_divergence, w)?;
    Ok(TuningOutputs {
        delta0,
        drift: v_star(delta0, w)?,
        threshold: threshold_for_arl(inputs.target_arl, delta0)?,
        theoretical_edd: edd_for_delta(inputs.target_arl, inputs.sym_divergence, w, delta0)?,
        window_star: w,
    })
}

/// Tuning with the window chosen by [`optimal_window`]. Also returns the
/// unconstrained optimum (search from `w = 2`) so callers can report when the
/// floor was binding.
pub fn tune_auto(gamma: f64, s_prime: f64, w_floor: usize, w_max: usize) -> Result<(TuningOutputs, usize)> {
    let w = optimal_window(gamma, s_prime, w_floor, w_max)?;
    let unconstrained = optimal_window(gamma, s_prime, 2, w_max.max(3))?;
    let out = tune(&TuningInputs { target_arl: gamma, sym_divergence: s_prime, window: w })?;
    Ok((out, unconstrained))
}
