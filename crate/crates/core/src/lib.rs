//! Sequential change-point detection for Gaussian streams whose mean and
//! variance both change.
//!
//! The centrepiece is a symmetric, data-adaptive CUSUM: the post-change
//! distribution is estimated from a short future window and the increment is
//! symmetrised with a KL-divergence term, so one threshold works for changes
//! in either direction. Classical CUSUM, adaptive CUSUM and a window-limited
//! GLR are provided as baselines.
//!
//! * [`gaussian`] - log-densities, KL divergences, window estimates.
//! * [`detectors`] - per-sample recursions and the streaming [`Detector`].
//! * [`tuning`] - drift, window and threshold from a target run length.
//! * [`montecarlo`] - ARL/EDD estimation, calibration and curves.
//! * [`synth`] - synthetic piecewise streams and alarm scoring.
//! * [`cli`] - the `dascusum` command-line front end.

pub mod cli;
pub mod detectors;
pub mod error;
pub mod gaussian;
pub mod montecarlo;
pub mod synth;
pub mod tuning;

pub use detectors::{run_detector, ChangeEvent, Detector, DetectorConfig, DetectorKind, DetectorState};
pub use error::{Error, Result};
pub use gaussian::GaussianParams;
