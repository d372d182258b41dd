//! Per-sample change statistics and the streaming state machines built on them.
//!
//! Four detectors share one driver ([`Detector`]):
//!
//! * `Cusum` - Page's recursion with both distributions known.
//! * `Adaptive` - the same recursion with the post-change distribution
//!   replaced by an estimate from the next `w` samples.
//! * `Glr` - window-limited generalized likelihood ratio over candidate
//!   change locations.
//! * `Das` - the symmetric adaptive CUSUM: log-likelihood ratio against the
//!   future-window estimate, plus `D_KL(theta0 || theta_hat)`, minus a drift.
//!
//! Detectors that look ahead report alarms `w` samples late; every
//! [`ChangeEvent`] carries both the alarm index and the index of the last
//! sample consumed to make that latency explicit.

mod glr;
mod stream;

pub use glr::glr_statistic;
pub use stream::{run_detector, Detector, DetectorState};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gaussian::{loglik_unchecked, GaussianParams};

/// Which recursion a [`Detector`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Cusum,
    Adaptive,
    Glr,
    Das,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [Self::Cusum, Self::Adaptive, Self::Glr, Self::Das];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cusum => "cusum",
            Self::Adaptive => "adaptive",
            Self::Glr => "glr",
            Self::Das => "das",
        }
    }

    /// Samples of decision latency added by the future window.
    pub fn lookahead(self, window: usize) -> usize {
        match self {
            Self::Adaptive | Self::Das => window,
            Self::Cusum | Self::Glr => 0,
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cusum" => Ok(Self::Cusum),
            "adaptive" | "adaptive-cusum" => Ok(Self::Adaptive),
            "glr" => Ok(Self::Glr),
            "das" | "das-cusum" => Ok(Self::Das),
            other => Err(Error::Usage(format!(
                "unknown detector '{other}' (expected cusum, adaptive, glr or das)"
            ))),
        }
    }
}

/// Tunables for every detector kind. Fields a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Alarm threshold `b`; an alarm fires when the statistic exceeds it.
    pub threshold: f64,
    /// Future-window length `w`.
    pub window: usize,
    /// Drift `v` subtracted from each DAS increment.
    pub drift: f64,
    /// Smallest symmetric divergence the tuning was done for.
    pub min_sym_div: f64,
    /// Target average run length the threshold was chosen for.
    pub target_arl: f64,
    /// Known post-change distribution (classical CUSUM only).
    pub post_change: Option<GaussianParams>,
    pub glr_max_lookback: usize,
    pub glr_min_segment: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold: 5.0,
            window: 40,
            drift: 0.1,
            min_sym_div: 1.0,
            target_arl: 5000.0,
            post_change: None,
            glr_max_lookback: 500,
            glr_min_segment: 2,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self, kind: DetectorKind) -> Result<()> {
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::Config(format!("threshold must be positive, got {}", self.threshold)));
        }
        match kind {
            DetectorKind::Cusum => {
                if self.post_change.is_none() {
                    return Err(Error::Config("classical CUSUM needs a post-change distribution".into()));
                }
            }
            DetectorKind::Adaptive => {
                if self.window < 2 {
                    return Err(Error::Config(format!("window must be at least 2, got {}", self.window)));
                }
            }
            DetectorKind::Das => {
                if self.window < 2 {
                    return Err(Error::Config(format!("window must be at least 2, got {}", self.window)));
                }
                if !(self.drift > 0.0 && self.drift.is_finite()) {
                    return Err(Error::Config(format!("drift must be positive, got {}", self.drift)));
                }
            }
            DetectorKind::Glr => {
                if self.glr_min_segment < 2 {
                    return Err(Error::Config("GLR minimum segment must be at least 2".into()));
                }
                if self.glr_max_lookback < self.glr_min_segment {
                    return Err(Error::Config("GLR lookback must be at least the minimum segment".into()));
                }
            }
        }
        Ok(())
    }
}

/// One detected change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeEvent {
    /// Index of the sample at which the statistic crossed the threshold.
    pub alarm_index: usize,
    /// Index of the last sample consumed before the alarm could be raised.
    pub decision_index: usize,
    /// Distribution adopted as the new pre-change reference.
    pub adopted_params: GaussianParams,
}

/// Log-likelihood ratio `ln f_post(x) - ln f_pre(x)`.
#[inline]
pub fn log_likelihood_ratio(x: f64, pre: &GaussianParams, post: &GaussianParams) -> f64 {
    loglik_unchecked(x, post) - loglik_unchecked(x, pre)
}

/// One step of Page's recursion, clamped after the sum: `(S + llr)^+`.
#[inline]
pub fn cusum_step(s_prev: f64, x: f64, theta0: &GaussianParams, theta1: &GaussianParams) -> f64 {
    (s_prev + log_likelihood_ratio(x, theta0, theta1)).max(0.0)
}

/// Symmetric increment: log-likelihood ratio of `x` under the window estimate
/// against `theta0`, plus `D_KL(theta0 || theta_hat)`, minus `drift`.
///
/// The log-variance terms of the ratio and the divergence cancel, leaving a
/// purely quadratic expression. When `theta_hat == theta0` the result is
/// exactly `-drift`.
#[inline]
pub fn das_cusum_increment(x: f64, theta0: &GaussianParams, theta_hat: &GaussianParams, drift: f64) -> f64 {
    let dh = x - theta_hat.mean;
    let d0 = x - theta0.mean;
    let dm = theta0.mean - theta_hat.mean;
    let quad = -(dh * dh) / (2.0 * theta_hat.variance) + (d0 * d0) / (2.0 * theta0.variance);
    quad + (theta0.variance + dm * dm) / (2.0 * theta_hat.variance) - 0.5 - drift
}

/// `(S)^+ + increment`: the clamp applies to the previous value only, so the
/// result can be negative.
#[inline]
pub fn das_cusum_step(s_prev: f64, increment: f64) -> f64 {
    s_prev.max(0.0) + increment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::kl_gaussian;

    fn gp(m: f64, v: f64) -> GaussianParams {
        GaussianParams::new(m, v).unwrap()
    }

    #[test]
    fn cusum_step_examples() {
        let (t0, t1) = (gp(0.0, 1.0), gp(1.0, 1.0));
        assert_eq!(cusum_step(0.0, 0.5, &t0, &t1), 0.0);
        assert!((cusum_step(1.0, 1.0, &t0, &t1) - 1.5).abs() < 1e-12);
        assert_eq!(cusum_step(0.0, -2.0, &t0, &t1), 0.0);
    }

    #[test]
    fn das_increment_examples() {
        let t0 = gp(0.0, 1.0);
        assert_eq!(das_cusum_increment(3.7, &t0, &t0, 0.25), -0.25);
        let inc = das_cusum_increment(1.0, &t0, &gp(1.0, 1.0), 0.1);
        assert!((inc - 0.9).abs() < 1e-12);
    }

    #[test]
    fn das_increment_matches_generic_form() {
        let t0 = gp(1.0, 1.0);
        for &(m, v) in &[(2.0, 2.0), (-3.0, 0.5), (1.0, 9.0), (10.0, 9.0)] {
            let th = gp(m, v);
            for i in -20..=20 {
                let x = i as f64 * 0.7;
                let generic = log_likelihood_ratio(x, &t0, &th) + kl_gaussian(&t0, &th) - 0.3;
                let fast = das_cusum_increment(x, &t0, &th, 0.3);
                assert!((generic - fast).abs() < 1e-9 * (1.0 + generic.abs()), "{m} {v} {x}");
            }
        }
    }

    #[test]
    fn das_step_examples() {
        assert_eq!(das_cusum_step(-3.0, 0.5), 0.5);
        assert!((das_cusum_step(2.0, -0.4) - 1.6).abs() < 1e-12);
        assert_eq!(das_cusum_step(0.0, -0.2), -0.2);
    }

    #[test]
    fn kind_round_trip() {
        for k in DetectorKind::ALL {
            assert_eq!(k.name().parse::<DetectorKind>().unwrap(), k);
        }
        assert!("bogus".parse::<DetectorKind>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = DetectorConfig::default();
        assert!(c.validate(DetectorKind::Das).is_ok());
        assert!(c.validate(DetectorKind::Cusum).is_err());
        c.drift = 0.0;
        assert!(c.validate(DetectorKind::Das).is_err());
        assert!(c.validate(DetectorKind::Adaptive).is_ok());
        c.window = 1;
        assert!(c.validate(DetectorKind::Adaptive).is_err());
        c.threshold = -1.0;
        assert!(c.validate(DetectorKind::Glr).is_err());
    }
}
