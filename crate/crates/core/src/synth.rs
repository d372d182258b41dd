//! Synthetic piecewise-Gaussian streams and alarm scoring against known
//! change points.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::detectors::ChangeEvent;
use crate::gaussian::GaussianParams;

/// Consecutive stationary segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseStream {
    pub segments: Vec<(GaussianParams, usize)>,
}

impl PiecewiseStream {
    pub fn new(segments: Vec<(GaussianParams, usize)>) -> Self {
        Self { segments }
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start index of every segment after the first.
    pub fn boundaries(&self) -> Vec<usize> {
        self.segments
            .iter()
            .scan(0, |acc, s| {
                *acc += s.1;
                Some(*acc)
            })
            .take(self.segments.len().saturating_sub(1))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (p, n) in &self.segments {
            let d = Normal::new(p.mean, p.std_dev()).expect("validated variance");
            out.extend((0..*n).map(|_| d.sample(rng)));
        }
        out
    }
}

/// Regimes of an occupancy-style signal. Each regime may contain several
/// segments (small in-regime shifts); only regime boundaries are real
/// transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeStream {
    pub regimes: Vec<Vec<(GaussianParams, usize)>>,
}

impl RegimeStream {
    pub fn flatten(&self) -> PiecewiseStream {
        PiecewiseStream::new(self.regimes.iter().flatten().copied().collect())
    }

    pub fn transitions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut at = 0;
        for r in &self.regimes[..self.regimes.len().saturating_sub(1)] {
            at += r.iter().map(|s| s.1).sum::<usize>();
            out.push(at);
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.flatten().sample(rng)
    }
}

fn gp(mean: f64, variance: f64) -> GaussianParams {
    GaussianParams { mean, variance }
}

/// Vacant seat N(1,1) -> occupied N(10,9) -> vacant N(1,1).
///
/// The occupied regime is not stationary: a posture shift to N(11.5,12)
/// holds for its middle stretch. Regime lengths are 1000 / 5000 / 1000.
pub fn occupancy_stream() -> RegimeStream {
    RegimeStream {
        regimes: vec![
            vec![(gp(1.0, 1.0), 1000)],
            vec![(gp(10.0, 9.0), 1000), (gp(11.5, 12.0), 3000), (gp(10.0, 9.0), 1000)],
            vec![(gp(1.0, 1.0), 1000)],
        ],
    }
}

/// Three stationary regimes N(1,1) -> N(10,9) -> N(1,1), `len` samples each.
pub fn three_regime_stream(len: usize) -> RegimeStream {
    RegimeStream {
        regimes: vec![
            vec![(gp(1.0, 1.0), len)],
            vec![(gp(10.0, 9.0), len)],
            vec![(gp(1.0, 1.0), len)],
        ],
    }
}

/// How a run's alarms line up with the true transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionOutcome {
    pub detected: usize,
    pub missed: usize,
    pub false_alarms: usize,
}

impl DetectionOutcome {
    pub fn is_clean(&self) -> bool {
        self.missed == 0 && self.false_alarms == 0
    }
}

/// A transition at `c` is detected by the first alarm with index in
/// `[c - early, c + late]`; every other alarm is false.
pub fn score_alarms(events: &[ChangeEvent], transitions: &[usize], early: usize, late: usize) -> DetectionOutcome {
    let mut used = vec![false; events.len()];
    let mut out = DetectionOutcome::default();
    for &c in transitions {
        let lo = c.saturating_sub(early);
        let hit = events
            .iter()
            .enumerate()
            .find(|(i, e)| !used[*i] && e.alarm_index >= lo && e.alarm_index <= c + late);
        match hit {
            Some((i, _)) => {
                used[i] = true;
                out.detected += 1;
            }
            None => out.missed += 1,
        }
    }
    out.false_alarms = used.iter().filter(|u| !**u).count();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::trial_rng;

    fn ev(t: usize) -> ChangeEvent {
        ChangeEvent { alarm_index: t, decision_index: t, adopted_params: gp(0.0, 1.0) }
    }

    #[test]
    fn boundaries_and_transitions() {
        let s = occupancy_stream();
        assert_eq!(s.transitions(), vec![1000, 6000]);
        assert_eq!(s.flatten().boundaries(), vec![1000, 2000, 5000, 6000]);
        assert_eq!(s.flatten().len(), 7000);
        let mut rng = trial_rng(1, 0);
        assert_eq!(s.sample(&mut rng).len(), 7000);
    }

    #[test]
    fn scoring() {
        let o = score_alarms(&[ev(995), ev(1010), ev(3000), ev(6040)], &[1000, 6000], 10, 50);
        assert_eq!(o, DetectionOutcome { detected: 2, missed: 0, false_alarms: 2 });
        let o = score_alarms(&[ev(1100)], &[1000, 6000], 10, 50);
        assert_eq!(o, DetectionOutcome { detected: 0, missed: 2, false_alarms: 1 });
        assert!(score_alarms(&[ev(1001), ev(6001)], &[1000, 6000], 0, 5).is_clean());
    }
}
