//! Bundled deterministic scenarios.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use super::{write_scenario, Scenario};
use crate::controller::ControllerConfig;
use crate::dynamics::{Breakpoint, Course, TrackProfile, Vehicle, WindField};
use crate::error::{Error, Result};

pub const FIXTURE_NAMES: [&str; 3] = ["flat16500", "hill", "gust"];

pub const RACE_LENGTH: f64 = 16_500.0;
pub const RACE_DURATION: f64 = 2357.0;
pub const SAFETY_SPEED: f64 = 12.0;
pub const ALPHA: f64 = 10.0;

/// Peak grade of the hill fixture.
pub const HILL_GRADE: f64 = 0.02;
/// Wavelength of its elevation profile (m).
pub const HILL_WAVELENGTH: f64 = 400.0;
/// Length of its constant-slope segments (m).
pub const HILL_SEGMENT: f64 = 10.0;

/// Headwind block of the gust fixture: start (s), length (s), wind speed (m/s).
pub const GUST: (f64, f64, f64) = (1000.0, 120.0, -3.0);

fn base(name: &str, course: Course) -> Scenario {
    Scenario {
        name: name.to_owned(),
        vehicle: Vehicle::virvolt(ALPHA),
        course,
        controller: ControllerConfig {
            duration: RACE_DURATION,
            ..ControllerConfig::default()
        },
        out_dir: super::output_dir(PathBuf::from("out").join(name)),
    }
}

/// Sinusoidal elevation with peak grade `HILL_GRADE`, starting downhill,
/// sampled at segment midpoints.
pub fn hill_track() -> Result<TrackProfile> {
    let n = (RACE_LENGTH / HILL_SEGMENT).round() as usize;
    let mut bps: Vec<Breakpoint> = (0..n)
        .map(|i| {
            let s = i as f64 * HILL_SEGMENT;
            let mid = s + 0.5 * HILL_SEGMENT;
            Breakpoint {
                s,
                slope: (-HILL_GRADE * (TAU * mid / HILL_WAVELENGTH).sin()).atan(),
                vsafe: SAFETY_SPEED,
            }
        })
        .collect();
    bps.push(Breakpoint {
        s: RACE_LENGTH,
        slope: 0.0,
        vsafe: SAFETY_SPEED,
    });
    TrackProfile::new(bps)
}

pub fn gust_wind() -> Result<WindField> {
    let (start, len, v) = GUST;
    WindField::uniform_schedule(vec![0.0, start, start + len], vec![0.0, v, 0.0])
}

pub fn fixture(name: &str) -> Result<Scenario> {
    match name {
        "flat16500" => Ok(base(name, Course::flat(RACE_LENGTH, SAFETY_SPEED)?)),
        "hill" => Ok(base(name, Course::new(hill_track()?, WindField::calm()))),
        "gust" => Ok(base(
            name,
            Course::new(TrackProfile::flat(RACE_LENGTH, SAFETY_SPEED)?, gust_wind()?),
        )),
        other => Err(Error::InvalidParameter(format!(
            "unknown fixture `{other}` (known: {})",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

/// Writes fixture `name` as a scenario directory.
pub fn dump_fixture(name: &str, dir: &Path) -> Result<()> {
    write_scenario(&fixture(name)?, dir)
}
