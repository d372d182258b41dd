use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dascusum_ffi::*;

fn default_config() -> DascusumConfig {
    let mut c = std::mem::MaybeUninit::uninit();
    assert_eq!(unsafe { dascusum_config_default(c.as_mut_ptr()) }, DascusumStatus::Ok);
    unsafe { c.assume_init() }
}

fn last_error() -> String {
    let p = dascusum_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn config_defaults_match_core() {
    let c = default_config();
    let d = dascusum::DetectorConfig::default();
    assert_eq!(c.threshold, d.threshold);
    assert_eq!(c.window, d.window);
    assert_eq!(c.glr_min_segment, d.glr_min_segment);
    assert!(!c.has_post_change);
}

#[test]
fn detector_round_trip_matches_core() {
    let mut cfg = default_config();
    cfg.threshold = 8.0;
    cfg.window = 20;
    cfg.drift = 0.3;

    let xs: Vec<f64> = (0..600).map(|i| if i < 300 { (i % 7) as f64 * 0.3 - 0.9 } else { 4.0 + (i % 5) as f64 }).collect();

    let mut det = ptr::null_mut();
    let st = unsafe { dascusum_detector_new(DascusumKind::Das, &cfg, 0.0, 1.0, &mut det) };
    assert_eq!(st, DascusumStatus::Ok);
    let mut ours = Vec::new();
    for &x in &xs {
        let mut ev = DascusumEvent { alarm_index: 0, decision_index: 0, adopted_mean: 0.0, adopted_variance: 0.0 };
        let mut fired = false;
        assert_eq!(unsafe { dascusum_detector_push(det, x, &mut ev, &mut fired) }, DascusumStatus::Ok);
        if fired {
            ours.push(ev);
        }
    }
    let mut stat = f64::NAN;
    assert_eq!(unsafe { dascusum_detector_statistic(det, &mut stat) }, DascusumStatus::Ok);
    assert!(stat.is_finite());
    unsafe { dascusum_detector_free(det) };

    let core_cfg = dascusum::DetectorConfig { threshold: 8.0, window: 20, drift: 0.3, ..Default::default() };
    let theirs = dascusum::run_detector(
        xs.iter().copied(),
        &core_cfg,
        dascusum::DetectorKind::Das,
        dascusum::GaussianParams::standard(),
    )
    .unwrap();
    assert!(!theirs.is_empty());
    assert_eq!(ours.len(), theirs.len());
    for (a, b) in ours.iter().zip(&theirs) {
        assert_eq!(a.alarm_index as usize, b.alarm_index);
        assert_eq!(a.decision_index as usize, b.decision_index);
        assert_eq!(a.adopted_mean, b.adopted_params.mean);
        assert_eq!(a.adopted_variance, b.adopted_params.variance);
    }
}

#[test]
fn rejected_sample_leaves_out_params_alone() {
    let cfg = default_config();
    let mut det = ptr::null_mut();
    assert_eq!(unsafe { dascusum_detector_new(DascusumKind::Das, &cfg, 0.0, 1.0, &mut det) }, DascusumStatus::Ok);
    let mut ev = DascusumEvent { alarm_index: 7, decision_index: 7, adopted_mean: 7.0, adopted_variance: 7.0 };
    let mut fired = true;
    let st = unsafe { dascusum_detector_push(det, f64::NAN, &mut ev, &mut fired) };
    assert_eq!(st, DascusumStatus::RejectedInput);
    assert!(fired);
    assert_eq!(ev.alarm_index, 7);
    assert!(last_error().contains("rejected"));
    unsafe { dascusum_detector_free(det) };
}

#[test]
fn invalid_arguments_map_to_status_codes() {
    let cfg = default_config();
    let mut det = ptr::null_mut();
    let st = unsafe { dascusum_detector_new(DascusumKind::Das, &cfg, 0.0, -1.0, &mut det) };
    assert_eq!(st, DascusumStatus::RejectedInput);
    assert!(det.is_null());

    // classical CUSUM needs a post-change distribution
    let st = unsafe { dascusum_detector_new(DascusumKind::Cusum, &cfg, 0.0, 1.0, &mut det) };
    assert_eq!(st, DascusumStatus::InvalidConfig);
    assert!(det.is_null());

    let st = unsafe { dascusum_detector_new(DascusumKind::Das, ptr::null(), 0.0, 1.0, &mut det) };
    assert_eq!(st, DascusumStatus::NullPointer);
    assert_eq!(last_error(), "config is null");

    let mut out = 0.0;
    assert_eq!(unsafe { dascusum_kl(0.0, 0.0, 1.0, 1.0, false, &mut out) }, DascusumStatus::RejectedInput);
    assert_eq!(unsafe { dascusum_detector_statistic(ptr::null(), &mut out) }, DascusumStatus::NullPointer);
    unsafe { dascusum_detector_free(ptr::null_mut()) };
}

#[test]
fn cusum_with_post_change() {
    let mut cfg = default_config();
    cfg.has_post_change = true;
    cfg.post_mean = 2.0;
    cfg.post_variance = 1.0;
    cfg.threshold = 5.0;
    let mut det = ptr::null_mut();
    assert_eq!(unsafe { dascusum_detector_new(DascusumKind::Cusum, &cfg, 0.0, 1.0, &mut det) }, DascusumStatus::Ok);
    let mut ev = DascusumEvent { alarm_index: 0, decision_index: 0, adopted_mean: 0.0, adopted_variance: 0.0 };
    let mut fired = false;
    let mut at = None;
    for i in 0..50 {
        assert_eq!(unsafe { dascusum_detector_push(det, 2.0, &mut ev, &mut fired) }, DascusumStatus::Ok);
        if fired {
            at = Some(i);
            break;
        }
    }
    // each sample at the post-change mean adds 2, so the third crosses 5
    assert_eq!(at, Some(2));
    assert_eq!(ev.alarm_index, ev.decision_index);
    unsafe { dascusum_detector_free(det) };
}

#[test]
fn tune_matches_core() {
    let mut t = std::mem::MaybeUninit::uninit();
    assert_eq!(unsafe { dascusum_tune(5000.0, 1.0, 40, 0, 0, t.as_mut_ptr()) }, DascusumStatus::Ok);
    let t = unsafe { t.assume_init() };
    let core = dascusum::tuning::tune(&dascusum::tuning::TuningInputs {
        target_arl: 5000.0,
        sym_divergence: 1.0,
        window: 40,
    })
    .unwrap();
    assert_eq!(t.window, 40);
    assert_eq!(t.unconstrained_window, 40);
    assert_eq!(t.threshold, core.threshold);
    assert_eq!(t.drift, core.drift);

    let mut a = std::mem::MaybeUninit::uninit();
    assert_eq!(unsafe { dascusum_tune(5000.0, 0.5, 0, 2, 200, a.as_mut_ptr()) }, DascusumStatus::Ok);
    let a = unsafe { a.assume_init() };
    assert_eq!(a.window, dascusum::tuning::optimal_window(5000.0, 0.5, 2, 200).unwrap());
    assert_eq!(a.window, a.unconstrained_window);

    let mut bad = std::mem::MaybeUninit::uninit();
    assert_ne!(unsafe { dascusum_tune(0.5, 1.0, 40, 0, 0, bad.as_mut_ptr()) }, DascusumStatus::Ok);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { dascusum_tune(5000.0, 1.0, 40, 0, 0, ptr::null_mut()) }, DascusumStatus::NullPointer);
}

#[test]
fn kl_values() {
    let mut kl = 0.0;
    assert_eq!(unsafe { dascusum_kl(0.0, 1.0, 1.0, 1.0, false, &mut kl) }, DascusumStatus::Ok);
    assert!((kl - 0.5).abs() < 1e-15);
    assert_eq!(unsafe { dascusum_kl(0.0, 1.0, 1.0, 1.0, true, &mut kl) }, DascusumStatus::Ok);
    assert!((kl - 1.0).abs() < 1e-15);
}

#[test]
fn status_messages_are_static_strings() {
    for s in [DascusumStatus::Ok, DascusumStatus::NullPointer, DascusumStatus::Internal] {
        let m = unsafe { CStr::from_ptr(dascusum_status_message(s)) }.to_str().unwrap();
        assert!(!m.is_empty());
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/dascusum.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "dascusum_config_default",
        "dascusum_detector_new",
        "dascusum_detector_push",
        "dascusum_detector_statistic",
        "dascusum_detector_free",
        "dascusum_tune",
        "dascusum_kl",
        "dascusum_last_error",
        "dascusum_status_message",
        "typedef struct DascusumDetector DascusumDetector;",
        "DASCUSUM_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

const C_SMOKE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "dascusum.h"

int main(void) {
    DascusumConfig cfg;
    if (dascusum_config_default(&cfg) != DASCUSUM_STATUS_OK) return 10;
    cfg.threshold = 8.0; cfg.window = 20; cfg.drift = 0.3;
    DascusumDetector *det = NULL;
    if (dascusum_detector_new(DASCUSUM_KIND_DAS, &cfg, 0.0, 1.0, &det) != DASCUSUM_STATUS_OK) return 11;
    int alarms = 0;
    for (int i = 0; i < 400; i++) {
        DascusumEvent ev; bool fired = false;
        double x = 1.2 * sin(1.7 * i) + (i < 200 ? 0.0 : 5.0);
        if (dascusum_detector_push(det, x, &ev, &fired) != DASCUSUM_STATUS_OK) return 12;
        if (fired) { alarms++; printf("%llu\n", (unsigned long long)ev.alarm_index); }
    }
    dascusum_detector_free(det);
    if (dascusum_detector_push(NULL, 0.0, NULL, NULL) != DASCUSUM_STATUS_NULL_POINTER) return 13;
    printf("%s\n", dascusum_last_error());
    return alarms > 0 ? 0 : 14;
}
"#;

/// Compile and link a C program against the header and the static library.
/// Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_against_staticlib() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    // target/<profile>/deps/ffi-<hash> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libdascusum_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = tmp.join("smoke.c");
    let bin = tmp.join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let inc = header().parent().unwrap().to_path_buf();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&inc)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "cc failed:\n{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "smoke exited {:?}: {stdout}", run.status.code());
    let first: u64 = stdout.lines().next().unwrap().parse().unwrap();
    assert!((175..=215).contains(&first), "first alarm at {first}");
    assert!(stdout.contains("detector is null"));
}
