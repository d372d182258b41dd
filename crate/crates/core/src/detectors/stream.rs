use std::collections::VecDeque;

use super::glr::scan;
use super::{cusum_step, das_cusum_increment, das_cusum_step, log_likelihood_ratio};
use super::{ChangeEvent, DetectorConfig, DetectorKind};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianParams, RollingMoments};

/// Read-only snapshot of a detector's internals.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    pub statistic: f64,
    /// Future samples currently buffered for the post-change estimate.
    pub window_buffer: Vec<f64>,
    pub pre_change: GaussianParams,
    /// Number of samples pushed so far.
    pub sample_index: usize,
}

/// Streaming change detector. Feed samples with [`Detector::push`]; alarms
/// come back as [`ChangeEvent`]s. After an alarm the statistic restarts at
/// zero and the adopted estimate becomes the new pre-change reference.
#[derive(Debug, Clone)]
pub struct Detector {
    kind: DetectorKind,
    config: DetectorConfig,
    pre_change: GaussianParams,
    post_change: Option<GaussianParams>,
    statistic: f64,
    /// Unprocessed samples; the front is the sample the next update scores.
    pending: VecDeque<f64>,
    /// Moments of `pending[1..]`, the future window.
    window: RollingMoments,
    /// GLR segment history since the last alarm, at most `glr_max_lookback`.
    history: Vec<f64>,
    /// Index of the sample at `pending.front()`.
    next_index: usize,
    pushed: usize,
}

impl Detector {
    pub fn new(kind: DetectorKind, config: DetectorConfig, theta0: GaussianParams) -> Result<Self> {
        config.validate(kind)?;
        let lookahead = kind.lookahead(config.window);
        let history_cap = if kind == DetectorKind::Glr { config.glr_max_lookback } else { 0 };
        Ok(Self {
            kind,
            post_change: config.post_change,
            pre_change: theta0,
            statistic: 0.0,
            pending: VecDeque::with_capacity(lookahead + 1),
            window: RollingMoments::with_capacity(lookahead),
            history: Vec::with_capacity(2 * history_cap),
            next_index: 0,
            pushed: 0,
            config,
        })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Value of the statistic after the most recent update.
    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn pre_change(&self) -> GaussianParams {
        self.pre_change
    }

    pub fn state(&self) -> DetectorState {
        DetectorState {
            statistic: self.statistic,
            window_buffer: self.pending.iter().skip(1).copied().collect(),
            pre_change: self.pre_change,
            sample_index: self.pushed,
        }
    }

    /// Consume one sample. Returns an event if this sample completed an alarm.
    pub fn push(&mut self, x: f64) -> Result<Option<ChangeEvent>> {
        if !x.is_finite() {
            return Err(Error::RejectedInput(format!(
                "sample {} is not finite ({x})",
                self.pushed
            )));
        }
        self.pushed += 1;
        Ok(self.push_unchecked(x))
    }

    /// Same as [`push`](Self::push) without the finiteness check; used by the
    /// simulators whose samples are finite by construction.
    pub(crate) fn push_unchecked(&mut self, x: f64) -> Option<ChangeEvent> {
        match self.kind {
            DetectorKind::Cusum => self.step_known(x),
            DetectorKind::Glr => self.step_glr(x),
            DetectorKind::Adaptive | DetectorKind::Das => self.step_lookahead(x),
        }
    }

    fn step_known(&mut self, x: f64) -> Option<ChangeEvent> {
        let t = self.next_index;
        self.next_index += 1;
        let post = self.post_change.expect("validated");
        self.statistic = cusum_step(self.statistic, x, &self.pre_change, &post);
        if self.statistic > self.config.threshold {
            // two-state toggle: the old reference becomes the next alternative
            self.post_change = Some(self.pre_change);
            self.pre_change = post;
            self.statistic = 0.0;
            return Some(ChangeEvent { alarm_index: t, decision_index: t, adopted_params: post });
        }
        None
    }

    fn step_glr(&mut self, x: f64) -> Option<ChangeEvent> {
        let t = self.next_index;
        self.next_index += 1;
        let cap = self.config.glr_max_lookback;
        self.history.push(x);
        if self.history.len() >= 2 * cap {
            self.history.drain(..self.history.len() - cap);
        }
        let start = self.history.len().saturating_sub(cap);
        let recent = &self.history[start..];
        if recent.len() < self.config.glr_min_segment {
            self.statistic = 0.0;
            return None;
        }
        let (stat, _, mle) = scan(recent, &self.pre_change, cap, self.config.glr_min_segment);
        self.statistic = stat;
        if stat > self.config.threshold {
            self.pre_change = mle;
            self.statistic = 0.0;
            self.history.clear();
            return Some(ChangeEvent { alarm_index: t, decision_index: t, adopted_params: mle });
        }
        None
    }

    fn step_lookahead(&mut self, x: f64) -> Option<ChangeEvent> {
        let w = self.config.window;
        if !self.pending.is_empty() {
            self.window.push(x);
        }
        self.pending.push_back(x);
        if self.pending.len() <= w {
            return None;
        }
        let current = self.pending.pop_front().expect("non-empty");
        let t = self.next_index;
        self.next_index += 1;
        let theta_hat = self.window.estimate();
        // the next current sample leaves the future window
        self.window.pop_front();

        self.statistic = match self.kind {
            DetectorKind::Das => das_cusum_step(
                self.statistic,
                das_cusum_increment(current, &self.pre_change, &theta_hat, self.config.drift),
            ),
            _ => (self.statistic + log_likelihood_ratio(current, &self.pre_change, &theta_hat)).max(0.0),
        };
        if self.statistic > self.config.threshold {
            self.pre_change = theta_hat;
            self.statistic = 0.0;
            return Some(ChangeEvent { alarm_index: t, decision_index: t + w, adopted_params: theta_hat });
        }
        None
    }
}

/// Run a fresh detector over a whole sequence. Samples left in the future
/// window when the stream ends are never scored.
pub fn run_detector<I>(
    samples: I,
    config: &DetectorConfig,
    kind: DetectorKind,
    theta0: GaussianParams,
) -> Result<Vec<ChangeEvent>>
where
    I: IntoIterator<Item = f64>,
{
    let mut det = Detector::new(kind, config.clone(), theta0)?;
    let mut events = Vec::new();
    for x in samples {
        if let Some(ev) = det.push(x)? {
            events.push(ev);
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::window_estimate;

    fn gp(m: f64, v: f64) -> GaussianParams {
        GaussianParams::new(m, v).unwrap()
    }

    fn das_config(w: usize, b: f64, v: f64) -> DetectorConfig {
        DetectorConfig { threshold: b, window: w, drift: v, ..DetectorConfig::default() }
    }

    #[test]
    fn lookahead_statistic_matches_batch_recursion() {
        let xs: Vec<f64> = (0..300).map(|i| ((i * 37) % 17) as f64 / 4.0 + if i > 150 { 3.0 } else { 0.0 }).collect();
        let w = 12;
        let t0 = gp(2.0, 1.5);
        let cfg = das_config(w, 1e12, 0.05);
        let mut det = Detector::new(DetectorKind::Das, cfg, t0).unwrap();
        let mut s = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            det.push(x).unwrap();
            if i >= w {
                let t = i - w;
                let hat = window_estimate(&xs[t + 1..=t + w]).unwrap();
                s = das_cusum_step(s, das_cusum_increment(xs[t], &t0, &hat, 0.05));
                assert!((det.statistic() - s).abs() < 1e-7 * (1.0 + s.abs()), "t={t}");
            }
        }
    }

    #[test]
    fn buffer_never_exceeds_window() {
        let mut det = Detector::new(DetectorKind::Das, das_config(5, 1e9, 0.1), gp(0.0, 1.0)).unwrap();
        for i in 0..40 {
            det.push(i as f64 * 0.1).unwrap();
            assert!(det.state().window_buffer.len() <= 5);
        }
        assert_eq!(det.state().sample_index, 40);
    }

    #[test]
    fn event_latency_equals_window() {
        let mut xs = vec![0.0; 60];
        xs.extend((0..60).map(|i| 20.0 + (i % 3) as f64));
        let cfg = das_config(10, 5.0, 0.1);
        let ev = run_detector(xs.iter().copied().map(|x| x + 0.001 * (x * 13.0).sin()), &cfg, DetectorKind::Das, gp(0.0, 1.0)).unwrap();
        assert!(!ev.is_empty());
        for e in &ev {
            assert_eq!(e.decision_index - e.alarm_index, 10);
        }
    }

    #[test]
    fn partial_window_at_end_is_discarded() {
        // a jump inside the final w samples is never scored
        let mut xs = vec![0.0, 0.5, -0.5, 0.2, -0.2, 0.1, -0.1, 0.3, -0.3, 0.0];
        xs.extend([50.0, 51.0, 49.0]);
        let cfg = das_config(5, 1.0, 0.1);
        let ev = run_detector(xs, &cfg, DetectorKind::Das, gp(0.0, 0.1)).unwrap();
        assert!(ev.iter().all(|e| e.alarm_index < 8));
    }

    #[test]
    fn non_finite_sample_rejected() {
        let mut det = Detector::new(DetectorKind::Adaptive, das_config(4, 1.0, 0.1), gp(0.0, 1.0)).unwrap();
        assert!(det.push(f64::NAN).is_err());
        assert_eq!(det.state().sample_index, 0);
    }

    #[test]
    fn cusum_toggles_reference_after_alarm() {
        let cfg = DetectorConfig { threshold: 3.0, post_change: Some(gp(5.0, 1.0)), ..DetectorConfig::default() };
        let mut xs = vec![0.0; 20];
        xs.extend([5.0; 20]);
        xs.extend([0.0; 20]);
        let ev = run_detector(xs, &cfg, DetectorKind::Cusum, gp(0.0, 1.0)).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].alarm_index, 20);
        assert_eq!(ev[0].adopted_params, gp(5.0, 1.0));
        assert_eq!(ev[1].alarm_index, 40);
        assert_eq!(ev[1].adopted_params, gp(0.0, 1.0));
    }

    #[test]
    fn glr_detects_and_adopts_segment_mle() {
        let cfg = DetectorConfig { threshold: 20.0, glr_min_segment: 5, ..DetectorConfig::default() };
        let mut xs: Vec<f64> = (0..100).map(|i| ((i * 7) % 5) as f64 * 0.5 - 1.0).collect();
        xs.extend((0..100).map(|i| 8.0 + ((i * 3) % 4) as f64));
        let ev = run_detector(xs.clone(), &cfg, DetectorKind::Glr, gp(0.0, 0.5)).unwrap();
        // The jump is large enough that the shortest segment ending on the
        // first post-change sample already crosses; it adopts that segment's
        // MLE, pre-change samples included.
        assert_eq!(ev[0].alarm_index, 100);
        assert_eq!(ev[0].decision_index, 100);
        let mle = window_estimate(&xs[96..=100]).unwrap();
        assert!((ev[0].adopted_params.mean - mle.mean).abs() < 1e-12);
        assert!((ev[0].adopted_params.variance - mle.variance).abs() < 1e-12);
        // The mixed estimate is then corrected by one re-alarm inside the
        // post-change regime, and nothing after that.
        assert_eq!(ev.len(), 2, "{ev:?}");
        assert!(ev[1].alarm_index > 100 && ev[1].alarm_index < 110);
        assert!(ev[1].adopted_params.mean > 7.0);
    }
}
