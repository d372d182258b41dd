use crate::error::{Error, Result};
use crate::gaussian::{GaussianParams, VARIANCE_FLOOR};

/// Window-limited GLR statistic for a Gaussian mean/variance change.
///
/// For every candidate start `n_c` whose trailing segment has length
/// `k in [min_segment, max_lookback]`, the maximised log-likelihood ratio of
/// the segment equals `k * D_KL(mle || theta0)`, where `mle` is the segment
/// mean and population variance. Returns the largest value and the start
/// index (into `history`) achieving it; ties go to the shortest segment.
pub fn glr_statistic(
    history: &[f64],
    theta0: &GaussianParams,
    max_lookback: usize,
    min_segment: usize,
) -> Result<(f64, usize)> {
    if min_segment < 2 {
        return Err(Error::Config("GLR minimum segment must be at least 2".into()));
    }
    if max_lookback < min_segment {
        return Err(Error::Config("GLR lookback must be at least the minimum segment".into()));
    }
    let n = history.len();
    if n < min_segment {
        return Err(Error::InsufficientData { needed: min_segment, got: n });
    }
    let (stat, start, _) = scan(history, theta0, max_lookback, min_segment);
    Ok((stat, start))
}

/// Shared by the streaming detector, which also wants the segment MLE.
pub(crate) fn scan(
    history: &[f64],
    theta0: &GaussianParams,
    max_lookback: usize,
    min_segment: usize,
) -> (f64, usize, GaussianParams) {
    let n = history.len();
    let longest = max_lookback.min(n);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut best = (f64::NEG_INFINITY, n - min_segment.min(n), *theta0);
    for k in 1..=longest {
        let d = history[n - k] - theta0.mean;
        sum += d;
        sum_sq += d * d;
        if k < min_segment {
            continue;
        }
        let kf = k as f64;
        let mean_d = sum / kf;
        let second = sum_sq / kf;
        let var = (second - mean_d * mean_d).max(VARIANCE_FLOOR);
        // k * KL(N(mean, var) || theta0); var + mean_d^2 = second unless floored
        let kl = 0.5 * (theta0.variance / var).ln() + (var + mean_d * mean_d) / (2.0 * theta0.variance) - 0.5;
        let stat = kf * kl.max(0.0);
        if stat > best.0 {
            best = (stat, n - k, GaussianParams { mean: theta0.mean + mean_d, variance: var });
        }
    }
    best
}
