//! Monte Carlo estimation of average run length (ARL) and expected detection
//! delay (EDD), threshold calibration, and theory-vs-simulation curves.
//!
//! Reproducibility contract: trial `i` of a run with master seed `s` draws
//! from `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`. Trials run in
//! parallel but are reduced in trial order, so estimates are bit-identical
//! for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::detectors::{Detector, DetectorConfig, DetectorKind};
use crate::error::{Error, Result};
use crate::gaussian::GaussianParams;
use crate::tuning::{delta0_star, edd_for_delta};

/// Lower and upper ends of the calibration bracket.
pub const CALIBRATION_BRACKET: (f64, f64) = (1e-3, 1e2);
/// Calibration stops once the estimated ARL is within this fraction of target.
pub const CALIBRATION_TOLERANCE: f64 = 0.10;
pub const CALIBRATION_MAX_ITER: usize = 20;
/// ARL runs are censored at this multiple of the target by default.
pub const HORIZON_FACTOR: f64 = 50.0;
/// Default censoring horizon for delay runs.
pub const EDD_HORIZON: usize = 1_000_000;

/// Independent generator for one trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Trials that hit the horizon without an alarm.
    pub censored: usize,
}

impl MonteCarloEstimate {
    fn from_samples(samples: &[(f64, bool)], master_seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.0).sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|s| (s.0 - mean) * (s.0 - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
            trials: samples.len(),
            master_seed,
            censored: samples.iter().filter(|s| s.1).count(),
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSource {
    Theoretical,
    Simulated,
}

impl PointSource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Theoretical => "theoretical",
            Self::Simulated => "simulated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub arl: f64,
    pub edd: f64,
    pub threshold: f64,
    pub window: usize,
    pub source: PointSource,
}

fn normal(p: &GaussianParams) -> Normal<f64> {
    Normal::new(p.mean, p.std_dev()).expect("validated variance")
}

/// Index of the first alarm at or before `horizon - 1`, feeding i.i.d. draws.
fn first_alarm(det: &mut Detector, rng: &mut ChaCha8Rng, dist: &Normal<f64>, horizon: usize) -> Option<usize> {
    let lookahead = det.kind().lookahead(det.config().window);
    for _ in 0..horizon + lookahead {
        if let Some(ev) = det.push_unchecked(dist.sample(rng)) {
            return (ev.alarm_index < horizon).then_some(ev.alarm_index);
        }
    }
    None
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    Ok(())
}

/// One ARL trial: alarm time (1-based) or the horizon when censored.
fn arl_trial(
    config: &DetectorConfig,
    theta0: GaussianParams,
    kind: DetectorKind,
    horizon: usize,
    seed: u64,
    trial: u64,
) -> (f64, bool) {
    let mut det = Detector::new(kind, config.clone(), theta0).expect("validated");
    let mut rng = trial_rng(seed, trial);
    match first_alarm(&mut det, &mut rng, &normal(&theta0), horizon) {
        Some(t) => ((t + 1) as f64, false),
        None => (horizon as f64, true),
    }
}

/// Mean time to the first false alarm on i.i.d. pre-change data.
pub fn estimate_arl(
    config: &DetectorConfig,
    theta0: GaussianParams,
    kind: DetectorKind,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_trials(trials)?;
    config.validate(kind)?;
    let lookahead = kind.lookahead(config.window);
    if horizon < lookahead + 1 {
        return Err(Error::Config(format!(
            "horizon {horizon} too short for a detector that looks {lookahead} samples ahead"
        )));
    }
    let samples: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| arl_trial(config, theta0, kind, horizon, seed, i))
        .collect();
    Ok(MonteCarloEstimate::from_samples(&samples, seed))
}

/// Mean detection delay with the change at the first sample. Delays count
/// every sample consumed, including the future-window latency.
pub fn estimate_edd(
    config: &DetectorConfig,
    theta0: GaussianParams,
    theta1: GaussianParams,
    kind: DetectorKind,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    estimate_edd_with_horizon(config, theta0, theta1, kind, trials, EDD_HORIZON, seed)
}

pub fn estimate_edd_with_horizon(
    config: &DetectorConfig,
    theta0: GaussianParams,
    theta1: GaussianParams,
    kind: DetectorKind,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_trials(trials)?;
    config.validate(kind)?;
    let lookahead = kind.lookahead(config.window) as f64;
    let dist = normal(&theta1);
    let samples: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut det = Detector::new(kind, config.clone(), theta0).expect("validated");
            let mut rng = trial_rng(seed, i);
            match first_alarm(&mut det, &mut rng, &dist, horizon) {
                Some(t) => ((t + 1) as f64 + lookahead, false),
                None => (horizon as f64 + lookahead, true),
            }
        })
        .collect();
    Ok(MonteCarloEstimate::from_samples(&samples, seed))
}

/// Result of a threshold calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    /// ARL estimate at `threshold`; `None` when the final probe stopped early
    /// because the run length was already known to exceed the band.
    pub arl: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Probe {
    Below(f64),
    Within(f64),
    Above,
}

/// Classify the ARL at threshold `b` against the target band. Trials are
/// processed in fixed-size chunks; once the running total already exceeds
/// the upper edge of the band the probe stops.
fn probe_arl(
    config: &DetectorConfig,
    theta0: GaussianParams,
    kind: DetectorKind,
    trials: usize,
    horizon: usize,
    seed: u64,
    target: f64,
) -> Probe {
    const CHUNK: usize = 16;
    let upper_total = target * (1.0 + CALIBRATION_TOLERANCE) * trials as f64;
    let mut total = 0.0;
    let mut start = 0;
    while start < trials {
        let end = (start + CHUNK).min(trials);
        let chunk: Vec<(f64, bool)> = (start as u64..end as u64)
            .into_par_iter()
            .map(|i| arl_trial(config, theta0, kind, horizon, seed, i))
            .collect();
        total += chunk.iter().map(|s| s.0).sum::<f64>();
        if total > upper_total {
            return Probe::Above;
        }
        start = end;
    }
    let mean = total / trials as f64;
    if (mean - target).abs() <= CALIBRATION_TOLERANCE * target {
        Probe::Within(mean)
    } else if mean < target {
        Probe::Below(mean)
    } else {
        Probe::Above
    }
}

/// Bisection on the threshold until the simulated ARL is within 10% of
/// `target_arl` (or 20 iterations). Every probe reuses the same master seed,
/// so successive estimates are coupled and monotone in the threshold.
pub fn calibrate_threshold(
    target_arl: f64,
    config: &DetectorConfig,
    theta0: GaussianParams,
    kind: DetectorKind,
    trials: usize,
    seed: u64,
) -> Result<Calibration> {
    check_trials(trials)?;
    let w = kind.lookahead(config.window) as f64;
    if !(target_arl > w && target_arl > 1.0) {
        return Err(Error::Config(format!("target ARL {target_arl} must exceed the window {w}")));
    }
    let horizon = (HORIZON_FACTOR * target_arl).ceil() as usize;
    let (mut lo, mut hi) = CALIBRATION_BRACKET;
    let mut cfg = config.clone();
    let mut probe = |b: f64| {
        cfg.threshold = b;
        cfg.validate(kind).map(|_| probe_arl(&cfg, theta0, kind, trials, horizon, seed, target_arl))
    };

    match probe(lo)? {
        Probe::Below(_) => {}
        Probe::Within(a) => return Ok(Calibration { threshold: lo, arl: Some(a), iterations: 0, converged: true }),
        Probe::Above => {
            return Err(Error::Calibration(format!(
                "ARL at the lower bracket b={lo} already exceeds the target {target_arl}"
            )))
        }
    }
    match probe(hi)? {
        Probe::Above => {}
        Probe::Within(a) => return Ok(Calibration { threshold: hi, arl: Some(a), iterations: 0, converged: true }),
        Probe::Below(a) => {
            return Err(Error::Calibration(format!(
                "ARL at the upper bracket b={hi} is {a:.1}, below the target {target_arl}"
            )))
        }
    }

    let mut last = (0.5 * (lo + hi), None);
    for iter in 1..=CALIBRATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        match probe(mid)? {
            Probe::Within(a) => {
                return Ok(Calibration { threshold: mid, arl: Some(a), iterations: iter, converged: true })
            }
            Probe::Below(a) => {
                lo = mid;
                last = (mid, Some(a));
            }
            Probe::Above => {
                hi = mid;
                last = (mid, None);
            }
        }
    }
    Ok(Calibration { threshold: last.0, arl: last.1, iterations: CALIBRATION_MAX_ITER, converged: false })
}

/// A two-distribution simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub theta0: GaussianParams,
    pub theta1: GaussianParams,
    pub kind: DetectorKind,
    /// Detector settings; `threshold` is overridden per curve point.
    pub config: DetectorConfig,
    /// Divergence used for the theoretical curve (usually `symmetric_kl(theta0, theta1)`).
    pub sym_divergence: f64,
    /// Censoring horizon for ARL runs.
    pub arl_horizon: usize,
}

/// Simulated (ARL, EDD) per threshold, plus the first-order theoretical
/// point at the same threshold for the symmetric detector. Sorted by ARL.
pub fn edd_vs_arl_curve(
    thresholds: &[f64],
    scenario: &Scenario,
    trials: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if thresholds.is_empty() {
        return Err(Error::Usage("threshold grid is empty".into()));
    }
    let w = scenario.config.window;
    let delta0 = match scenario.kind {
        DetectorKind::Das => Some(delta0_star(scenario.sym_divergence, w)?),
        _ => None,
    };
    let mut points = Vec::with_capacity(2 * thresholds.len());
    for &b in thresholds {
        let mut cfg = scenario.config.clone();
        cfg.threshold = b;
        let arl = estimate_arl(&cfg, scenario.theta0, scenario.kind, trials, scenario.arl_horizon, seed)?;
        let edd = estimate_edd(&cfg, scenario.theta0, scenario.theta1, scenario.kind, trials, seed)?;
        points.push(CurvePoint { arl: arl.value, edd: edd.value, threshold: b, window: w, source: PointSource::Simulated });
        if let Some(d) = delta0 {
            let arl_th = (d * b).exp();
            if arl_th >= 1.0 {
                let edd_th = edd_for_delta(arl_th, scenario.sym_divergence, w, d)?;
                points.push(CurvePoint { arl: arl_th, edd: edd_th, threshold: b, window: w, source: PointSource::Theoretical });
            }
        }
    }
    points.sort_by(|a, b| a.arl.total_cmp(&b.arl));
    Ok(points)
}
