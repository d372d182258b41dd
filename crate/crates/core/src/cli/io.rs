//! CSV ingestion and the text formats the commands emit.

use std::io::{BufRead, Write};

use crate::detectors::ChangeEvent;
use crate::error::{Error, Result};
use crate::montecarlo::CurvePoint;

pub const EVENTS_HEADER: &str = "alarm_index,decision_index,adopted_mean,adopted_variance";
pub const CURVE_HEADER: &str = "source\tarl\tedd\tthreshold\twindow";

/// Read `index,value` rows. A first row whose fields are not numbers is
/// treated as a header. Index gaps are tolerated; rows are kept in order.
pub fn ingest_csv<R: BufRead>(reader: R) -> Result<Vec<(i64, f64)>> {
    let mut rows = Vec::new();
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split(',').map(str::trim);
        let (Some(idx), Some(val), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse { line: lineno, message: format!("expected 'index,value', got '{trimmed}'") });
        };
        let is_header = first && idx.parse::<i64>().is_err() && val.parse::<f64>().is_err();
        first = false;
        if is_header {
            continue;
        }
        let index = idx
            .parse::<i64>()
            .map_err(|_| Error::Parse { line: lineno, message: format!("bad index '{idx}'") })?;
        let value = val
            .parse::<f64>()
            .map_err(|_| Error::Parse { line: lineno, message: format!("bad value '{val}'") })?;
        if !value.is_finite() {
            return Err(Error::RejectedInput(format!("line {lineno}: value must be finite, got {val}")));
        }
        rows.push((index, value));
    }
    Ok(rows)
}

/// Six significant digits, `%g` style: fixed notation for moderate
/// magnitudes, exponent otherwise, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    // rounding to 6 digits can bump the exponent (999999.7 -> 1e6)
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_events<W: Write + ?Sized>(out: &mut W, events: &[ChangeEvent]) -> Result<()> {
    writeln!(out, "{EVENTS_HEADER}")?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{}",
            e.alarm_index,
            e.decision_index,
            fmt_num(e.adopted_params.mean),
            fmt_num(e.adopted_params.variance)
        )?;
    }
    Ok(())
}

pub fn write_points<W: Write + ?Sized>(out: &mut W, points: &[CurvePoint]) -> Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.source.name(),
            fmt_num(p.arl),
            fmt_num(p.edd),
            fmt_num(p.threshold),
            p.window
        )?;
    }
    Ok(())
}

/// Comma-separated reals.
pub fn parse_reals(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Usage(format!("bad {what} value '{t}'"))))
        .collect()
}

/// Comma-separated integers or an inclusive range `lo:hi`.
pub fn parse_windows(s: &str) -> Result<Vec<usize>> {
    let bad = |t: &str| Error::Usage(format!("bad window value '{t}'"));
    if let Some((lo, hi)) = s.split_once(':') {
        let lo: usize = lo.trim().parse().map_err(|_| bad(lo))?;
        let hi: usize = hi.trim().parse().map_err(|_| bad(hi))?;
        if hi < lo {
            return Err(Error::Usage(format!("empty window range {lo}:{hi}")));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| bad(t)))
        .collect()
}
