use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::ConfigFile;
use super::io::{fmt_num, ingest_csv, parse_reals, parse_windows, write_events, write_points};
use super::{DetectArgs, DetectorArgs, ParamArgs, StudyArgs, TuneArgs};
use crate::detectors::{run_detector, DetectorConfig, DetectorKind};
use crate::error::{Error, Result};
use crate::gaussian::{symmetric_kl, window_estimate, GaussianParams};
use crate::montecarlo::{
    calibrate_threshold, edd_vs_arl_curve, estimate_arl, estimate_edd, CurvePoint, PointSource, Scenario,
    HORIZON_FACTOR,
};
use crate::tuning::{
    delta0_star, edd_for_delta, threshold_for_arl, tune as tune_fixed, tune_auto, v_star, TuningInputs,
    DEFAULT_W_FLOOR, DEFAULT_W_MAX,
};

const DEFAULT_WINDOW: usize = 40;
const DEFAULT_ARL: f64 = 5000.0;
const DEFAULT_TRIALS: usize = 500;
const DEFAULT_SEED: u64 = 42;
const CALIBRATION_ARLS: [f64; 2] = [5000.0, 10000.0];
const CALIBRATION_WINDOWS: [usize; 7] = [10, 20, 30, 40, 50, 100, 150];

fn params(cfg: &ConfigFile, mean: Option<f64>, var: Option<f64>, which: char) -> Result<Option<GaussianParams>> {
    let mean = cfg.pick(mean, &format!("mean{which}"))?;
    let var = cfg.pick(var, &format!("var{which}"))?;
    match (mean, var) {
        (Some(m), Some(v)) => GaussianParams::new(m, v).map(Some),
        (None, None) => Ok(None),
        _ => Err(Error::Usage(format!("--mean{which} and --var{which} must be given together"))),
    }
}

fn scenario_params(cfg: &ConfigFile, p: &ParamArgs) -> Result<(GaussianParams, GaussianParams)> {
    let theta0 = params(cfg, p.mean0, p.var0, '0')?.unwrap_or(GaussianParams { mean: 1.0, variance: 1.0 });
    let theta1 = params(cfg, p.mean1, p.var1, '1')?.unwrap_or(GaussianParams { mean: 2.0, variance: 2.0 });
    Ok((theta0, theta1))
}

/// Detector settings from flags and file. Threshold and drift not given
/// explicitly are tuned from the target run length: `ln(gamma) / delta0*`
/// and `v*` for the symmetric detector, `ln(gamma)` for the others.
fn resolve_detector(
    a: &DetectorArgs,
    cfg: &ConfigFile,
    default_s: f64,
    theta1: Option<GaussianParams>,
) -> Result<(DetectorKind, DetectorConfig)> {
    let kind = cfg.pick(a.detector, "detector")?.unwrap_or(DetectorKind::Das);
    let window = cfg.pick(a.window, "window")?.unwrap_or(DEFAULT_WINDOW);
    let arl = cfg.pick(a.arl, "arl")?.unwrap_or(DEFAULT_ARL);
    let s = cfg.pick(a.sym_div, "sym-div")?.unwrap_or(default_s);
    let threshold = cfg.pick(a.threshold, "threshold")?;
    let drift = cfg.pick(a.drift, "drift")?;

    let needs_tuning = kind == DetectorKind::Das && (threshold.is_none() || drift.is_none());
    let tuned = if needs_tuning {
        Some(tune_fixed(&TuningInputs { target_arl: arl, sym_divergence: s, window })?)
    } else {
        None
    };
    let threshold = match (threshold, tuned) {
        (Some(b), _) => b,
        (None, Some(t)) => t.threshold,
        (None, None) => {
            if arl.is_nan() || arl <= 1.0 {
                return Err(Error::Config(format!("target ARL must exceed 1, got {arl}")));
            }
            arl.ln()
        }
    };
    let defaults = DetectorConfig::default();
    if kind == DetectorKind::Cusum && theta1.is_none() {
        return Err(Error::Usage("cusum needs the post-change distribution (--mean1 and --var1)".into()));
    }
    let config = DetectorConfig {
        threshold,
        window,
        drift: drift.or(tuned.map(|t| t.drift)).unwrap_or(defaults.drift),
        min_sym_div: s,
        target_arl: arl,
        post_change: theta1,
        glr_max_lookback: cfg.pick(a.glr_lookback, "glr-lookback")?.unwrap_or(defaults.glr_max_lookback),
        glr_min_segment: cfg.pick(a.glr_min_segment, "glr-min-segment")?.unwrap_or(defaults.glr_min_segment),
    };
    config.validate(kind)?;
    Ok((kind, config))
}

fn with_output(path: Option<&Path>, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

pub(super) fn detect(
    a: &DetectArgs,
    cfg: &ConfigFile,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let input: Option<PathBuf> = cfg.pick(a.input.clone(), "input")?;
    let rows = match input {
        Some(p) if p.as_os_str() != "-" => {
            let file = File::open(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            ingest_csv(BufReader::new(file))?
        }
        _ => ingest_csv(stdin)?,
    };
    if rows.is_empty() {
        return Err(Error::RejectedInput("input contains no samples".into()));
    }
    let samples: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let n = samples.len();

    let theta1 = params(cfg, a.params.mean1, a.params.var1, '1')?;
    let (kind, config) = resolve_detector(&a.detector, cfg, 1.0, theta1)?;
    let w = config.window;
    let given = params(cfg, a.params.mean0, a.params.var0, '0')?;
    if (given.is_none() || kind.lookahead(w) > 0) && w > n {
        return Err(Error::InsufficientData { needed: w, got: n });
    }
    let theta0 = match given {
        Some(p) => p,
        None => {
            let p = window_estimate(&samples[..w])?;
            writeln!(
                stderr,
                "pre-change estimated from the first {w} samples: mean={} variance={}",
                fmt_num(p.mean),
                fmt_num(p.variance)
            )?;
            p
        }
    };

    let events = run_detector(samples.iter().copied(), &config, kind, theta0)?;
    let output: Option<PathBuf> = cfg.pick(a.output.clone(), "output")?;
    with_output(output.as_deref(), stdout, |out| write_events(out, &events))?;
    writeln!(
        stderr,
        "{} events in {n} samples (detector={kind} threshold={} window={w})",
        events.len(),
        fmt_num(config.threshold)
    )?;
    Ok(())
}

fn as_usage(e: Error) -> Error {
    match e {
        Error::Config(m) | Error::Domain(m) => Error::Usage(m),
        other => other,
    }
}

pub(super) fn tune(a: &TuneArgs, cfg: &ConfigFile, stdout: &mut dyn Write) -> Result<()> {
    let arl: f64 = cfg.pick(a.arl, "arl")?.ok_or_else(|| Error::Usage("tune needs --arl".into()))?;
    let s: f64 = cfg.pick(a.sym_div, "sym-div")?.ok_or_else(|| Error::Usage("tune needs --sym-div".into()))?;
    let tsv = cfg.switch(a.tsv, "tsv")?;
    let floor = cfg.pick(a.w_floor, "w-floor")?.unwrap_or(DEFAULT_W_FLOOR);
    let w_max = cfg.pick(a.w_max, "w-max")?.unwrap_or(DEFAULT_W_MAX);

    let (w, free) = match cfg.pick(a.window, "window")? {
        Some(w) => (w, None),
        None => {
            let (out, free) = tune_auto(arl, s, floor, w_max).map_err(as_usage)?;
            (out.window_star, Some(free))
        }
    };
    let report = (|| {
        let delta0 = match cfg.pick(a.delta0, "delta0")? {
            Some(d) => d,
            None => delta0_star(s, w)?,
        };
        Ok::<_, Error>([
            ("window", w.to_string()),
            ("delta0", fmt_num(delta0)),
            ("drift", fmt_num(v_star(delta0, w)?)),
            ("threshold", fmt_num(threshold_for_arl(arl, delta0)?)),
            ("edd", fmt_num(edd_for_delta(arl, s, w, delta0)?)),
        ])
    })()
    .map_err(as_usage)?;

    // the floor only binds when the free optimum lies below it
    let binding = free.filter(|f| *f < w);
    if tsv {
        for (k, v) in &report {
            writeln!(stdout, "{k}\t{v}")?;
        }
        if let Some(f) = binding {
            writeln!(stdout, "unconstrained_window\t{f}")?;
        }
    } else {
        for (k, v) in &report {
            writeln!(stdout, "{:<10} {v}", format!("{k}:"))?;
        }
        if let Some(f) = binding {
            writeln!(stdout, "note: window floor {w} is binding; the unconstrained optimum is w = {f}")?;
        }
    }
    Ok(())
}

fn study_name(a: &StudyArgs, cfg: &ConfigFile, choices: &str) -> Result<String> {
    cfg.pick(a.study.clone(), "study")?
        .ok_or_else(|| Error::Usage(format!("a scenario is required: --study {choices}")))
}

fn list_arg(flag: &Option<String>, cfg: &ConfigFile, key: &str) -> Option<String> {
    flag.clone().or_else(|| cfg.raw(key).map(str::to_string))
}

pub(super) fn simulate(a: &StudyArgs, cfg: &ConfigFile, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let study = study_name(a, cfg, "calibration|point")?;
    let (theta0, theta1) = scenario_params(cfg, &a.params)?;
    let trials = cfg.pick(a.trials, "trials")?.unwrap_or(DEFAULT_TRIALS);
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(DEFAULT_SEED);
    let default_s = symmetric_kl(&theta0, &theta1);
    let output: Option<PathBuf> = cfg.pick(a.output.clone(), "output")?;

    let points = match study.as_str() {
        "calibration" => {
            let arls = match list_arg(&a.arls, cfg, "arls") {
                Some(s) => parse_reals(&s, "arl")?,
                None => CALIBRATION_ARLS.to_vec(),
            };
            let windows = match list_arg(&a.windows, cfg, "windows") {
                Some(s) => parse_windows(&s)?,
                None => CALIBRATION_WINDOWS.to_vec(),
            };
            if arls.is_empty() || windows.is_empty() {
                return Err(Error::Usage("the calibration study needs at least one arl and one window".into()));
            }
            let kind = cfg.pick(a.detector.detector, "detector")?.unwrap_or(DetectorKind::Das);
            let s = cfg.pick(a.detector.sym_div, "sym-div")?.unwrap_or(default_s);
            calibration_table(&arls, &windows, s, kind, theta0, theta1, trials, seed, stderr)?
        }
        "point" => {
            let (kind, config) = resolve_detector(&a.detector, cfg, default_s, Some(theta1))?;
            let horizon = cfg
                .pick(a.horizon, "horizon")?
                .unwrap_or((HORIZON_FACTOR * config.target_arl).ceil() as usize);
            let arl = estimate_arl(&config, theta0, kind, trials, horizon, seed)?;
            let edd = estimate_edd(&config, theta0, theta1, kind, trials, seed)?;
            writeln!(
                stderr,
                "arl {} +/- {} ({} of {trials} censored at {horizon}); edd {} +/- {}",
                fmt_num(arl.value),
                fmt_num(arl.std_error),
                arl.censored,
                fmt_num(edd.value),
                fmt_num(edd.std_error)
            )?;
            vec![CurvePoint {
                arl: arl.value,
                edd: edd.value,
                threshold: config.threshold,
                window: config.window,
                source: PointSource::Simulated,
            }]
        }
        other => return Err(Error::Usage(format!("unknown simulate study '{other}' (expected calibration or point)"))),
    };
    with_output(output.as_deref(), stdout, |out| write_points(out, &points))
}

/// Theoretical and calibrated thresholds per (target run length, window),
/// with the delay each threshold achieves.
#[allow(clippy::too_many_arguments)]
fn calibration_table(
    arls: &[f64],
    windows: &[usize],
    s: f64,
    kind: DetectorKind,
    theta0: GaussianParams,
    theta1: GaussianParams,
    trials: usize,
    seed: u64,
    stderr: &mut dyn Write,
) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::new();
    for &gamma in arls {
        for &w in windows {
            let delta0 = delta0_star(s, w)?;
            let b = threshold_for_arl(gamma, delta0)?;
            if kind == DetectorKind::Das {
                points.push(CurvePoint {
                    arl: gamma,
                    edd: edd_for_delta(gamma, s, w, delta0)?,
                    threshold: b,
                    window: w,
                    source: PointSource::Theoretical,
                });
            }
            let mut config = DetectorConfig {
                threshold: b,
                window: w,
                drift: v_star(delta0, w)?,
                min_sym_div: s,
                target_arl: gamma,
                post_change: Some(theta1),
                ..DetectorConfig::default()
            };
            let cal = calibrate_threshold(gamma, &config, theta0, kind, trials, seed)?;
            if !cal.converged {
                writeln!(stderr, "calibration for arl={gamma} w={w} did not converge")?;
            }
            config.threshold = cal.threshold;
            let arl = match cal.arl {
                Some(a) => a,
                None => {
                    let horizon = (HORIZON_FACTOR * gamma).ceil() as usize;
                    estimate_arl(&config, theta0, kind, trials, horizon, seed)?.value
                }
            };
            let edd = estimate_edd(&config, theta0, theta1, kind, trials, seed)?;
            points.push(CurvePoint {
                arl,
                edd: edd.value,
                threshold: cal.threshold,
                window: w,
                source: PointSource::Simulated,
            });
        }
    }
    Ok(points)
}

pub(super) fn curve(a: &StudyArgs, cfg: &ConfigFile, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<()> {
    let study = study_name(a, cfg, "window|threshold")?;
    let (theta0, theta1) = scenario_params(cfg, &a.params)?;
    let default_s = symmetric_kl(&theta0, &theta1);
    let output: Option<PathBuf> = cfg.pick(a.output.clone(), "output")?;

    let points = match study.as_str() {
        "window" => {
            let gamma = cfg.pick(a.detector.arl, "arl")?.unwrap_or(DEFAULT_ARL);
            let s = cfg.pick(a.detector.sym_div, "sym-div")?.unwrap_or(default_s);
            let windows = parse_windows(&list_arg(&a.windows, cfg, "windows").unwrap_or_else(|| "5:60".into()))?;
            if windows.is_empty() {
                return Err(Error::Usage("window grid is empty".into()));
            }
            windows
                .iter()
                .map(|&w| {
                    let delta0 = delta0_star(s, w)?;
                    Ok(CurvePoint {
                        arl: gamma,
                        edd: edd_for_delta(gamma, s, w, delta0)?,
                        threshold: threshold_for_arl(gamma, delta0)?,
                        window: w,
                        source: PointSource::Theoretical,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        "threshold" => {
            let grid = list_arg(&a.thresholds, cfg, "thresholds")
                .ok_or_else(|| Error::Usage("the threshold study needs --thresholds".into()))?;
            let thresholds = parse_reals(&grid, "threshold")?;
            let (kind, config) = resolve_detector(&a.detector, cfg, default_s, Some(theta1))?;
            let trials = cfg.pick(a.trials, "trials")?.unwrap_or(DEFAULT_TRIALS);
            let seed = cfg.pick(a.seed, "seed")?.unwrap_or(DEFAULT_SEED);
            let horizon = cfg
                .pick(a.horizon, "horizon")?
                .unwrap_or((HORIZON_FACTOR * config.target_arl).ceil() as usize);
            let scenario = Scenario {
                theta0,
                theta1,
                kind,
                sym_divergence: config.min_sym_div,
                config,
                arl_horizon: horizon,
            };
            edd_vs_arl_curve(&thresholds, &scenario, trials, seed)?
        }
        other => return Err(Error::Usage(format!("unknown curve study '{other}' (expected window or threshold)"))),
    };
    with_output(output.as_deref(), stdout, |out| write_points(out, &points))
}
