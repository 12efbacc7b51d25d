//! On-disk formats: params JSON, track / wind / profile CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Breakpoint, DragForm, PowerModel, TrackProfile, Vehicle, VehicleParams, WindField};
use crate::error::{Error, Result};

pub const TRACK_HEADER: [&str; 3] = ["s_m", "slope_rad", "vsafe_mps"];
pub const WIND_HEADER: [&str; 3] = ["s_m", "t_s", "v_mps"];
pub const PROFILE_HEADER: [&str; 2] = ["s_mps", "value"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerModelName {
    WheelPower,
    ConstantElectrical,
}

/// The params file as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub a: f64,
    pub c: f64,
    pub g: f64,
    pub f1: f64,
    pub m: f64,
    pub alpha: f64,
    pub power_model: PowerModelName,
    #[serde(default = "default_watts")]
    pub constant_watts: f64,
    #[serde(default)]
    pub signed_drag: bool,
}

fn default_watts() -> f64 {
    PowerModel::DEFAULT_WATTS
}

impl ParamsFile {
    pub fn from_vehicle(v: &Vehicle) -> Result<Self> {
        let (power_model, constant_watts) = match &v.power {
            PowerModel::WheelPower => (PowerModelName::WheelPower, PowerModel::DEFAULT_WATTS),
            PowerModel::ConstantElectrical { watts } => (PowerModelName::ConstantElectrical, *watts),
            PowerModel::Custom(_) => {
                return Err(Error::InvalidParameter(
                    "a custom power curve cannot be written to a params file".into(),
                ))
            }
        };
        let p = v.params;
        Ok(ParamsFile {
            a: p.a,
            c: p.c,
            g: p.g,
            f1: p.f1,
            m: p.m,
            alpha: p.alpha,
            power_model,
            constant_watts,
            signed_drag: v.drag == DragForm::Signed,
        })
    }

    pub fn to_vehicle(&self) -> Result<Vehicle> {
        let params = VehicleParams {
            a: self.a,
            c: self.c,
            g: self.g,
            f1: self.f1,
            m: self.m,
            alpha: self.alpha,
        };
        let power = match self.power_model {
            PowerModelName::WheelPower => PowerModel::WheelPower,
            PowerModelName::ConstantElectrical => PowerModel::ConstantElectrical {
                watts: self.constant_watts,
            },
        };
        let drag = if self.signed_drag {
            DragForm::Signed
        } else {
            DragForm::Literal
        };
        Vehicle::new(params, power, drag)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
}

pub fn read_params(path: &Path) -> Result<ParamsFile> {
    let file = open(path)?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))
}

pub fn read_vehicle(path: &Path) -> Result<Vehicle> {
    read_params(path)?.to_vehicle()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rows of a numeric CSV with the given header. Errors carry the 1-based file line.
fn read_rows<const N: usize>(path: &Path, header: [&str; N]) -> Result<Vec<[f64; N]>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(open(path)?);
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
        return Ok(Vec::new());
    }
    if found != header {
        return Err(Error::parse(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != N {
            return Err(Error::parse(
                path,
                line,
                format!("expected {N} fields, found {}", record.len()),
            ));
        }
        let mut row = [0.0; N];
        for (i, field) in record.iter().enumerate() {
            row[i] = field.parse::<f64>().map_err(|_| {
                Error::parse(path, line, format!("`{field}` is not a number ({})", header[i]))
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_track(path: &Path) -> Result<TrackProfile> {
    let rows = read_rows(path, TRACK_HEADER)?;
    TrackProfile::new(
        rows.into_iter()
            .map(|[s, slope, vsafe]| Breakpoint { s, slope, vsafe })
            .collect(),
    )
}

/// Row-major rectangular grid: arclength is the outer index.
pub fn read_wind(path: &Path) -> Result<WindField> {
    let rows = read_rows(path, WIND_HEADER)?;
    if rows.is_empty() {
        return Ok(WindField::calm());
    }
    let mut s_axis: Vec<f64> = Vec::new();
    for r in &rows {
        if s_axis.last() != Some(&r[0]) {
            s_axis.push(r[0]);
        }
    }
    let nt = rows.len() / s_axis.len();
    if nt * s_axis.len() != rows.len() {
        return Err(Error::Validation(format!(
            "wind grid is not rectangular: {} rows for {} arclengths",
            rows.len(),
            s_axis.len()
        )));
    }
    let t_axis: Vec<f64> = rows[..nt].iter().map(|r| r[1]).collect();
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k / nt, k % nt);
        if r[0] != s_axis[i] || r[1] != t_axis[j] {
            return Err(Error::parse(
                path,
                k as u64 + 2,
                "wind rows must list every time for each arclength, in the same order",
            ));
        }
    }
    WindField::new(s_axis, t_axis, rows.iter().map(|r| r[2]).collect())
}

/// `(speeds, values)` of a profile table.
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = read_rows(path, PROFILE_HEADER)?;
    Ok(rows.into_iter().map(|[s, v]| (s, v)).unzip())
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let fields: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the track with round-trip exact numbers.
pub fn write_track(path: &Path, track: &TrackProfile) -> Result<()> {
    write_rows(
        path,
        TRACK_HEADER,
        track.breakpoints().iter().map(|b| [b.s, b.slope, b.vsafe]),
    )
}

pub fn write_wind(path: &Path, wind: &WindField) -> Result<()> {
    let (s, t, v) = (wind.arclengths(), wind.times(), wind.values());
    let nt = t.len();
    write_rows(
        path,
        WIND_HEADER,
        (0..v.len()).map(|k| [s[k / nt], t[k % nt], v[k]]),
    )
}

pub fn write_profile(path: &Path, s: &[f64], values: &[f64]) -> Result<()> {
    write_rows(path, PROFILE_HEADER, s.iter().zip(values).map(|(a, b)| [*a, *b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.csv");
        fs::write(&path, "s_m,slope_rad,vsafe_mps\n0,0,12\n100,abc,12\n").unwrap();
        match read_track(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_track_has_no_breakpoints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.csv");
        fs::write(&path, "").unwrap();
        let err = read_track(&path).unwrap_err();
        assert!(err.to_string().contains("no breakpoints"), "{err}");
        fs::write(&path, "s_m,slope_rad,vsafe_mps\n").unwrap();
        assert!(read_track(&path)
            .unwrap_err()
            .to_string()
            .contains("no breakpoints"));
    }

    #[test]
    fn non_monotone_track_names_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.csv");
        fs::write(&path, "s_m,slope_rad,vsafe_mps\n0,0,12\n50,0,12\n40,0,12\n").unwrap();
        assert!(read_track(&path)
            .unwrap_err()
            .to_string()
            .contains("strictly increasing"));
    }

    #[test]
    fn wind_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wind.csv");
        let wind = WindField::new(
            vec![0.0, 10.0],
            vec![0.0, 1.0, 2.5],
            vec![0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0],
        )
        .unwrap();
        write_wind(&path, &wind).unwrap();
        assert_eq!(read_wind(&path).unwrap(), wind);
    }

    #[test]
    fn params_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        let v = Vehicle::virvolt(10.0);
        write_json(&path, &ParamsFile::from_vehicle(&v).unwrap()).unwrap();
        assert_eq!(read_vehicle(&path).unwrap(), v);
        fs::write(&path, r#"{"a": 1e-3}"#).unwrap();
        assert!(matches!(read_vehicle(&path), Err(Error::Parse { .. })));
    }
}
