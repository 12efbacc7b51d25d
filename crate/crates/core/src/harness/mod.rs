//! Scenario files, bundled fixtures and report output for the `ecodrive` binary.
//!
//! A scenario directory holds `params.json`, `track.csv`, an optional
//! `wind.csv` (calm when absent) and an optional `controller.json`
//! (defaults when absent).

pub mod files;
pub mod fixtures;
pub mod report;

use std::path::{Path, PathBuf};

use crate::controller::ControllerConfig;
use crate::dynamics::{Course, DragForm, PowerModel, Vehicle, WindField};
use crate::error::{Error, Result};
use crate::optimizer::GridSpec;

pub use fixtures::{dump_fixture, fixture, FIXTURE_NAMES};
pub use report::{emit_report, sig9};

pub const PARAMS_FILE: &str = "params.json";
pub const TRACK_FILE: &str = "track.csv";
pub const WIND_FILE: &str = "wind.csv";
pub const CONTROLLER_FILE: &str = "controller.json";
/// Overrides the output directory of every scenario.
pub const OUT_ENV: &str = "ECODRIVE_OUT";

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub vehicle: Vehicle,
    pub course: Course,
    pub controller: ControllerConfig,
    pub out_dir: PathBuf,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.vehicle.params.validate()?;
        self.vehicle.power.validate()?;
        self.controller.validate()?;
        self.controller.race_length(&self.course)?;
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("override `{assignment}` is not of the form key=value"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("override {key}: `{value}` is not a number")))
        };
        let p = &mut self.vehicle.params;
        let c = &mut self.controller;
        match key {
            "a" => p.a = number()?,
            "c" => p.c = number()?,
            "g" => p.g = number()?,
            "f1" => p.f1 = number()?,
            "m" => p.m = number()?,
            "alpha" => p.alpha = number()?,
            "power_model" => {
                self.vehicle.power = match value {
                    "wheel_power" => PowerModel::WheelPower,
                    "constant_electrical" => PowerModel::constant_electrical(),
                    other => return Err(Error::InvalidParameter(format!("unknown power model `{other}`"))),
                }
            }
            "constant_watts" => self.vehicle.power = PowerModel::ConstantElectrical { watts: number()? },
            "signed_drag" => {
                self.vehicle.drag = match value {
                    "true" => DragForm::Signed,
                    "false" => DragForm::Literal,
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "signed_drag must be true or false, got `{other}`"
                        )))
                    }
                }
            }
            "replan_interval" => c.replan_interval = number()?,
            "delta" => c.delta = number()?,
            "length" => c.length = Some(number()?),
            "duration" => c.duration = number()?,
            "dt" => c.dt = number()?,
            "overshoot_slack" => c.overshoot_slack = number()?,
            "hard_cap" => c.hard_cap = number()?,
            "trace_interval" => c.trace_interval = number()?,
            "grid" => {
                c.grid = match value {
                    "coarse" => GridSpec::coarse(),
                    "fine" => GridSpec::fine(),
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "grid must be coarse or fine, got `{other}`"
                        )))
                    }
                }
            }
            other => return Err(Error::InvalidParameter(format!("unknown override key `{other}`"))),
        }
        Ok(())
    }
}

/// Output directory: `$ECODRIVE_OUT` when set, otherwise `default`.
pub fn output_dir(default: impl Into<PathBuf>) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => default.into(),
    }
}

/// Reads and validates the scenario in `dir`, then applies `overrides` in order.
pub fn load_scenario(dir: &Path, overrides: &[String]) -> Result<Scenario> {
    let vehicle = files::read_params(&dir.join(PARAMS_FILE))?;
    let track = files::read_track(&dir.join(TRACK_FILE))?;
    let wind_path = dir.join(WIND_FILE);
    let wind = if wind_path.exists() {
        files::read_wind(&wind_path)?
    } else {
        WindField::calm()
    };
    let controller_path = dir.join(CONTROLLER_FILE);
    let controller = if controller_path.exists() {
        let text = std::fs::read_to_string(&controller_path).map_err(|source| Error::File {
            path: controller_path.clone(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(&controller_path, e.line() as u64, e.to_string()))?
    } else {
        ControllerConfig::default()
    };
    let name = dir
        .file_name()
        .map_or_else(|| "scenario".to_owned(), |n| n.to_string_lossy().into_owned());
    let mut scenario = Scenario {
        name,
        // parameter invariants are checked after the overrides
        vehicle: vehicle_unchecked(&vehicle),
        course: Course::new(track, wind),
        controller,
        out_dir: output_dir(dir.join("out")),
    };
    for o in overrides {
        scenario.set(o)?;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn vehicle_unchecked(p: &files::ParamsFile) -> Vehicle {
    let mut v = Vehicle::virvolt(p.alpha);
    v.params = crate::dynamics::VehicleParams {
        a: p.a,
        c: p.c,
        g: p.g,
        f1: p.f1,
        m: p.m,
        alpha: p.alpha,
    };
    v.power = match p.power_model {
        files::PowerModelName::WheelPower => PowerModel::WheelPower,
        files::PowerModelName::ConstantElectrical => PowerModel::ConstantElectrical {
            watts: p.constant_watts,
        },
    };
    v.drag = if p.signed_drag {
        DragForm::Signed
    } else {
        DragForm::Literal
    };
    v
}

/// Writes `scenario` as a scenario directory.
pub fn write_scenario(scenario: &Scenario, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })?;
    files::write_json(
        &dir.join(PARAMS_FILE),
        &files::ParamsFile::from_vehicle(&scenario.vehicle)?,
    )?;
    files::write_track(&dir.join(TRACK_FILE), &scenario.course.track)?;
    if !scenario.course.wind.is_calm() {
        files::write_wind(&dir.join(WIND_FILE), &scenario.course.wind)?;
    }
    files::write_json(&dir.join(CONTROLLER_FILE), &scenario.controller)?;
    Ok(())
}
