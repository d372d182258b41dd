//! C ABI over the `dascusum` detectors and tuning functions.
//!
//! Conventions:
//! * every fallible function returns a [`DascusumStatus`]; results come back
//!   through out-pointers, which are written only on success;
//! * detectors are opaque handles created by [`dascusum_detector_new`] and
//!   released with [`dascusum_detector_free`];
//! * the message of the most recent failure on the calling thread is
//!   available from [`dascusum_last_error`];
//! * panics never cross the boundary; they are reported as
//!   `DASCUSUM_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dascusum::gaussian::{kl_gaussian, symmetric_kl};
use dascusum::tuning::{self, TuningInputs};
use dascusum::{Detector, DetectorConfig, DetectorKind, Error, GaussianParams};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DascusumStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    RejectedInput = 3,
    InsufficientData = 4,
    Domain = 5,
    Calibration = 6,
    Parse = 7,
    Io = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DascusumKind {
    Cusum = 0,
    Adaptive = 1,
    Glr = 2,
    Das = 3,
}

impl From<DascusumKind> for DetectorKind {
    fn from(k: DascusumKind) -> Self {
        match k {
            DascusumKind::Cusum => DetectorKind::Cusum,
            DascusumKind::Adaptive => DetectorKind::Adaptive,
            DascusumKind::Glr => DetectorKind::Glr,
            DascusumKind::Das => DetectorKind::Das,
        }
    }
}

/// Detector settings. Start from [`dascusum_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DascusumConfig {
    pub threshold: f64,
    pub window: usize,
    pub drift: f64,
    /// Set when `post_mean`/`post_variance` are meaningful (classical CUSUM).
    pub has_post_change: bool,
    pub post_mean: f64,
    pub post_variance: f64,
    pub glr_max_lookback: usize,
    pub glr_min_segment: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DascusumEvent {
    pub alarm_index: u64,
    pub decision_index: u64,
    pub adopted_mean: f64,
    pub adopted_variance: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DascusumTuning {
    pub window: usize,
    pub delta0: f64,
    pub drift: f64,
    pub threshold: f64,
    pub theoretical_edd: f64,
    /// Best window without the floor; equals `window` when the floor is slack.
    pub unconstrained_window: usize,
}

/// Opaque streaming detector.
pub struct DascusumDetector {
    inner: Detector,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DascusumStatus {
    match err {
        Error::RejectedInput(_) => DascusumStatus::RejectedInput,
        Error::InsufficientData { .. } => DascusumStatus::InsufficientData,
        Error::Config(_) | Error::Usage(_) => DascusumStatus::InvalidConfig,
        Error::Domain(_) => DascusumStatus::Domain,
        Error::Calibration(_) => DascusumStatus::Calibration,
        Error::Parse { .. } => DascusumStatus::Parse,
        Error::Io(_) => DascusumStatus::Io,
    }
}

/// Run `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> DascusumStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DascusumStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            DascusumStatus::Internal
        }
    }
}

fn null_error(what: &str) -> DascusumStatus {
    set_last_error(format!("{what} is null"));
    DascusumStatus::NullPointer
}

fn to_config(c: &DascusumConfig) -> Result<DetectorConfig, Error> {
    let post_change = if c.has_post_change { Some(GaussianParams::new(c.post_mean, c.post_variance)?) } else { None };
    Ok(DetectorConfig {
        threshold: c.threshold,
        window: c.window,
        drift: c.drift,
        post_change,
        glr_max_lookback: c.glr_max_lookback,
        glr_min_segment: c.glr_min_segment,
        ..DetectorConfig::default()
    })
}

/// Fill `out` with the library defaults.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dascusum_config_default(out: *mut DascusumConfig) -> DascusumStatus {
    if out.is_null() {
        return null_error("out");
    }
    let d = DetectorConfig::default();
    let c = DascusumConfig {
        threshold: d.threshold,
        window: d.window,
        drift: d.drift,
        has_post_change: false,
        post_mean: 0.0,
        post_variance: 1.0,
        glr_max_lookback: d.glr_max_lookback,
        glr_min_segment: d.glr_min_segment,
    };
    // SAFETY: checked non-null; caller guarantees validity.
    unsafe { out.write(c) };
    DascusumStatus::Ok
}

/// Create a detector with pre-change distribution N(`pre_mean`, `pre_variance`).
///
/// # Safety
/// `config` must be null or point to a valid config; `out` must be null or
/// valid for writes. On success `*out` owns a handle to pass to
/// [`dascusum_detector_free`].
#[no_mangle]
pub unsafe extern "C" fn dascusum_detector_new(
    kind: DascusumKind,
    config: *const DascusumConfig,
    pre_mean: f64,
    pre_variance: f64,
    out: *mut *mut DascusumDetector,
) -> DascusumStatus {
    if config.is_null() {
        return null_error("config");
    }
    if out.is_null() {
        return null_error("out");
    }
    // SAFETY: checked non-null; caller guarantees it points to a config.
    let cfg = unsafe { *config };
    guard(|| {
        let theta0 = GaussianParams::new(pre_mean, pre_variance)?;
        let inner = Detector::new(kind.into(), to_config(&cfg)?, theta0)?;
        let handle = Box::into_raw(Box::new(DascusumDetector { inner }));
        // SAFETY: checked non-null above.
        unsafe { out.write(handle) };
        Ok(())
    })
}

/// Feed one sample. `*fired` is set to 1 and `*event` filled when the sample
/// completes an alarm, otherwise `*fired` is 0 and `*event` untouched.
/// Non-finite samples are rejected without changing the detector.
///
/// # Safety
/// `det` must be a live handle; `event` and `fired` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dascusum_detector_push(
    det: *mut DascusumDetector,
    x: f64,
    event: *mut DascusumEvent,
    fired: *mut bool,
) -> DascusumStatus {
    if det.is_null() {
        return null_error("detector");
    }
    if event.is_null() || fired.is_null() {
        return null_error("event/fired");
    }
    // SAFETY: live handle per contract; no other reference exists during the call.
    let det = unsafe { &mut *det };
    guard(|| {
        let ev = det.inner.push(x)?;
        // SAFETY: out-pointers checked non-null.
        unsafe {
            fired.write(ev.is_some());
            if let Some(e) = ev {
                event.write(DascusumEvent {
                    alarm_index: e.alarm_index as u64,
                    decision_index: e.decision_index as u64,
                    adopted_mean: e.adopted_params.mean,
                    adopted_variance: e.adopted_params.variance,
                });
            }
        }
        Ok(())
    })
}

/// Current value of the detection statistic.
///
/// # Safety
/// `det` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dascusum_detector_statistic(det: *const DascusumDetector, out: *mut f64) -> DascusumStatus {
    if det.is_null() {
        return null_error("detector");
    }
    if out.is_null() {
        return null_error("out");
    }
    // SAFETY: live handle and writable out-pointer per contract.
    unsafe { out.write((*det).inner.statistic()) };
    DascusumStatus::Ok
}

/// Release a detector. Null is accepted and ignored.
///
/// # Safety
/// `det` must be null or a handle from [`dascusum_detector_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn dascusum_detector_free(det: *mut DascusumDetector) {
    if !det.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(det) });
    }
}

/// Tune for target run length `gamma` and divergence `sym_div`. With
/// `window == 0` the window is searched over `[w_floor, w_max]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dascusum_tune(
    gamma: f64,
    sym_div: f64,
    window: usize,
    w_floor: usize,
    w_max: usize,
    out: *mut DascusumTuning,
) -> DascusumStatus {
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        let (t, free) = if window == 0 {
            tuning::tune_auto(gamma, sym_div, w_floor, w_max)?
        } else {
            (tuning::tune(&TuningInputs { target_arl: gamma, sym_divergence: sym_div, window })?, window)
        };
        let r = DascusumTuning {
            window: t.window_star,
            delta0: t.delta0,
            drift: t.drift,
            threshold: t.threshold,
            theoretical_edd: t.theoretical_edd,
            unconstrained_window: free,
        };
        // SAFETY: checked non-null.
        unsafe { out.write(r) };
        Ok(())
    })
}

/// `D_KL(N(m1, v1) || N(m2, v2))`, or the symmetric sum when `symmetric`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dascusum_kl(
    m1: f64,
    v1: f64,
    m2: f64,
    v2: f64,
    symmetric: bool,
    out: *mut f64,
) -> DascusumStatus {
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        let (p, q) = (GaussianParams::new(m1, v1)?, GaussianParams::new(m2, v2)?);
        let kl = if symmetric { symmetric_kl(&p, &q) } else { kl_gaussian(&p, &q) };
        // SAFETY: checked non-null.
        unsafe { out.write(kl) };
        Ok(())
    })
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dascusum_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, human-readable name of a status code.
#[no_mangle]
pub extern "C" fn dascusum_status_message(status: DascusumStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        DascusumStatus::Ok => b"ok\0",
        DascusumStatus::NullPointer => b"null pointer\0",
        DascusumStatus::InvalidConfig => b"invalid configuration\0",
        DascusumStatus::RejectedInput => b"rejected input\0",
        DascusumStatus::InsufficientData => b"insufficient data\0",
        DascusumStatus::Domain => b"domain error\0",
        DascusumStatus::Calibration => b"calibration failed\0",
        DascusumStatus::Parse => b"parse error\0",
        DascusumStatus::Io => b"i/o error\0",
        DascusumStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}
