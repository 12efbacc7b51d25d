//! Report files of a simulated race and their read-back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::controller::{Flag, RaceResult, RaceSummary};
use crate::dynamics::Engine;
use crate::error::{Error, Result};

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "speed_trace.csv";
pub const SCENARIO_DIR: &str = "scenario";
pub const TELEMETRY_HEADER: &str = "t_s,x1_m,x2_mps,u,N,E_J,Va_mps,Vb_mps,flag";
pub const TRACE_HEADER: &str = "t_s,x2_mps,Va_mps,Vb_mps,u";

/// `x` with 9 significant digits, in the style of C's `%.9g`.
pub fn sig9(x: f64) -> String {
    const P: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_owned()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round9(x: f64) -> f64 {
    sig9(x).parse().unwrap_or(x)
}

/// The summary as written to `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryFile {
    pub finish_time_s: Option<f64>,
    #[serde(rename = "total_energy_J")]
    pub total_energy_j: f64,
    pub switches: u32,
    pub min_switch_gap_s: Option<f64>,
    pub avg_speed_mps: f64,
    pub flags: Vec<Flag>,
}

impl From<&RaceSummary> for SummaryFile {
    fn from(s: &RaceSummary) -> Self {
        SummaryFile {
            finish_time_s: s.finish_time_s.map(round9),
            total_energy_j: round9(s.total_energy_j),
            switches: s.switches,
            min_switch_gap_s: s.min_switch_gap_s.map(round9),
            avg_speed_mps: round9(s.avg_speed_mps),
            flags: s.flags.clone(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
}

fn flags_field(flags: &[Flag]) -> String {
    flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join("|")
}

/// Writes `telemetry.csv`, `summary.json` and `speed_trace.csv` into `out_dir`,
/// and the scenario itself into `out_dir/scenario`.
pub fn emit_report(result: &RaceResult, scenario: &Scenario, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::File {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut w = create(&out_dir.join(TELEMETRY_FILE))?;
    writeln!(w, "{TELEMETRY_HEADER}")?;
    for row in &result.telemetry {
        let s = &row.state;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            sig9(s.t),
            sig9(s.x1),
            sig9(s.x2),
            s.u.flag(),
            s.switches,
            sig9(s.energy),
            sig9(row.va),
            sig9(row.vb),
            flags_field(&row.flags)
        )?;
    }
    w.flush()?;

    let mut w = create(&out_dir.join(TRACE_FILE))?;
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &result.trace {
        writeln!(
            w,
            "{},{},{},{},{}",
            sig9(r.t),
            sig9(r.x2),
            sig9(r.va),
            sig9(r.vb),
            r.u.flag()
        )?;
    }
    w.flush()?;

    super::files::write_json(&out_dir.join(SUMMARY_FILE), &SummaryFile::from(&result.summary))?;
    super::write_scenario(scenario, &out_dir.join(SCENARIO_DIR))
}

/// One parsed telemetry row.
#[derive(Clone, Debug, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub u: Engine,
    pub switches: u32,
    pub energy: f64,
    pub va: f64,
    pub vb: f64,
    pub flags: Vec<Flag>,
}

pub fn read_summary(dir: &Path) -> Result<SummaryFile> {
    let path = dir.join(SUMMARY_FILE);
    let file = File::open(&path).map_err(|source| Error::File {
        path: path.clone(),
        source,
    })?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::parse(&path, e.line() as u64, e.to_string()))
}

pub fn read_telemetry(dir: &Path) -> Result<Vec<TelemetryRecord>> {
    let path = dir.join(TELEMETRY_FILE);
    let file = File::open(&path).map_err(|source| Error::File {
        path: path.clone(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = i as u64 + 1;
        if i == 0 {
            if line != TELEMETRY_HEADER {
                return Err(Error::parse(
                    &path,
                    1,
                    format!("expected header `{TELEMETRY_HEADER}`"),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::parse(
                &path,
                lineno,
                format!("expected 9 fields, found {}", fields.len()),
            ));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .parse()
                .map_err(|_| Error::parse(&path, lineno, format!("`{}` is not a number", fields[k])))
        };
        let u = fields[3]
            .parse::<u8>()
            .map_err(|_| Error::parse(&path, lineno, "engine flag must be 0 or 1"))
            .and_then(|f| Engine::from_flag(f).map_err(|e| Error::parse(&path, lineno, e.to_string())))?;
        let switches = fields[4]
            .parse()
            .map_err(|_| Error::parse(&path, lineno, format!("`{}` is not a count", fields[4])))?;
        let flags = if fields[8].is_empty() {
            Vec::new()
        } else {
            fields[8]
                .split('|')
                .map(|f| {
                    Flag::parse(f).ok_or_else(|| Error::parse(&path, lineno, format!("unknown flag `{f}`")))
                })
                .collect::<Result<_>>()?
        };
        rows.push(TelemetryRecord {
            t: num(0)?,
            x1: num(1)?,
            x2: num(2)?,
            u,
            switches,
            energy: num(5)?,
            va: num(6)?,
            vb: num(7)?,
            flags,
        });
    }
    Ok(rows)
}

/// Summary values recomputed from telemetry rows. The finish time is taken
/// from `summary` since the race length is not part of the telemetry.
pub fn recompute_summary(rows: &[TelemetryRecord], finish_time_s: Option<f64>) -> Result<SummaryFile> {
    let last = rows
        .last()
        .ok_or_else(|| Error::Validation("telemetry has no rows".into()))?;
    let mut switch_times = vec![0.0];
    for w in rows.windows(2) {
        if w[1].u != w[0].u {
            switch_times.push(w[1].t);
        }
    }
    let mut flags: Vec<Flag> = rows.iter().flat_map(|r| r.flags.iter().copied()).collect();
    flags.sort();
    flags.dedup();
    Ok(SummaryFile {
        finish_time_s,
        total_energy_j: last.energy,
        switches: last.switches,
        min_switch_gap_s: switch_times.windows(2).map(|w| w[1] - w[0]).reduce(f64::min),
        avg_speed_mps: if last.t > 0.0 { last.x1 / last.t } else { 0.0 },
        flags,
    })
}

/// Mismatches between a summary file and its telemetry, one line each.
pub fn check_report(dir: &Path) -> Result<(SummaryFile, Vec<String>)> {
    let summary = read_summary(dir)?;
    let rows = read_telemetry(dir)?;
    let again = recompute_summary(&rows, summary.finish_time_s)?;
    let mut issues = Vec::new();
    // telemetry is written with 9 significant digits
    let close = |a: f64, b: f64, abs: f64| (a - b).abs() <= 1e-8 * a.abs().max(b.abs()) + abs;
    if !close(summary.total_energy_j, again.total_energy_j, 0.0) {
        issues.push(format!(
            "total_energy_J {} vs telemetry {}",
            summary.total_energy_j, again.total_energy_j
        ));
    }
    if summary.switches != again.switches {
        issues.push(format!(
            "switches {} vs telemetry {}",
            summary.switches, again.switches
        ));
    }
    let last = rows.last().expect("rows");
    if !close(summary.avg_speed_mps, again.avg_speed_mps, 1e-8) {
        issues.push(format!(
            "avg_speed_mps {} vs telemetry {}",
            summary.avg_speed_mps, again.avg_speed_mps
        ));
    }
    match (summary.min_switch_gap_s, again.min_switch_gap_s) {
        (None, None) => {}
        (Some(a), Some(b)) if close(a, b, 1e-8 * last.t.max(1.0)) => {}
        (a, b) => issues.push(format!("min_switch_gap_s {a:?} vs telemetry {b:?}")),
    }
    if let Some(t) = summary.finish_time_s {
        if !close(t, last.t, 0.0) {
            issues.push(format!("finish_time_s {t} but telemetry ends at {}", last.t));
        }
    }
    if summary.flags != again.flags {
        issues.push(format!(
            "flags {:?} vs telemetry {:?}",
            summary.flags, again.flags
        ));
    }
    Ok((summary, issues))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_matches_printf_g() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(7.0), "7");
        assert_eq!(sig9(119_957.123_456_789), "119957.123");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(-2.5e-7), "-2.5e-07");
        assert_eq!(sig9(1.234_567_891e12), "1.23456789e+12");
        assert_eq!(sig9(123_456_789.4), "123456789");
        assert_eq!(sig9(999_999_999.6), "1e+09");
        assert_eq!(sig9(0.000_1), "0.0001");
        assert_eq!(sig9(f64::INFINITY), "inf");
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [6.15, 7.891_234_567_89, 48.18e3, 1e-9] {
            let once = round9(x);
            assert_eq!(round9(once), once);
        }
    }
}
