//! C ABI for `ecodrive`.
//!
//! Objects cross the boundary as opaque handles created by `eco_*_new` /
//! `eco_*_load` functions and released with the matching `eco_*_free`.
//! Every fallible call returns an `EcoStatus`; on failure the message is
//! kept per thread and can be read with `eco_last_error_message`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ecodrive::harness::{self, report, Scenario};
use ecodrive::optimizer::{BandKind, GridSpec, OscillationBand};
use ecodrive::{Engine, Error, FrozenDynamics, RaceResult, Vehicle};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Numerical = 4,
    Parse = 5,
    Io = 6,
    NotApplicable = 7,
    OutOfRange = 8,
    Panic = 99,
}

impl From<&Error> for EcoStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::InvalidSegment(_)
            | Error::InvalidProfile(_)
            | Error::Validation(_)
            | Error::OutOfTrack { .. } => EcoStatus::InvalidArgument,
            Error::InfeasibleSlice(_) | Error::InfeasibleCandidate(_) | Error::InfeasibleTarget(_) => {
                EcoStatus::Infeasible
            }
            Error::NonFinite(_) | Error::Quadrature(_) | Error::DivergenceRisk(_) => EcoStatus::Numerical,
            Error::Parse { .. } | Error::Json(_) => EcoStatus::Parse,
            Error::File { .. } | Error::Io(_) => EcoStatus::Io,
            Error::Inapplicable(_) | Error::NotApplicable(_) => EcoStatus::NotApplicable,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(EcoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EcoStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EcoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EcoStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EcoStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EcoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(EcoStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns its full length in bytes.
#[no_mangle]
pub unsafe extern "C" fn eco_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eco_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque vehicle model.
pub struct EcoVehicle(Vehicle);

/// Opaque scenario: vehicle, course and controller settings.
pub struct EcoScenario(Scenario);

/// Opaque result of a simulated race.
pub struct EcoRace(RaceResult);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcoBandKind {
    Oscillating = 0,
    Dwelling = 1,
    Resting = 2,
    Coast = 3,
    Clamped = 4,
    Unreachable = 5,
}

impl From<BandKind> for EcoBandKind {
    fn from(k: BandKind) -> Self {
        match k {
            BandKind::Oscillating => EcoBandKind::Oscillating,
            BandKind::Dwelling => EcoBandKind::Dwelling,
            BandKind::Resting => EcoBandKind::Resting,
            BandKind::Coast => EcoBandKind::Coast,
            BandKind::Clamped => EcoBandKind::Clamped,
            BandKind::Unreachable => EcoBandKind::Unreachable,
        }
    }
}

/// An oscillation band and its one-period figures (SI units).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcoBand {
    pub va: f64,
    pub vb: f64,
    pub dwell: f64,
    pub rest_dwell: f64,
    pub period: f64,
    pub distance: f64,
    pub energy: f64,
    pub avg_cost: f64,
    pub kind: EcoBandKind,
}

impl From<OscillationBand> for EcoBand {
    fn from(b: OscillationBand) -> Self {
        EcoBand {
            va: b.va,
            vb: b.vb,
            dwell: b.dwell,
            rest_dwell: b.rest_dwell,
            period: b.period,
            distance: b.distance,
            energy: b.energy,
            avg_cost: b.avg_cost,
            kind: b.kind.into(),
        }
    }
}

/// Summary of a race. Absent values (no finish, fewer than two switches) are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcoRaceSummary {
    pub finish_time_s: f64,
    pub total_energy_j: f64,
    pub switches: u32,
    pub min_switch_gap_s: f64,
    pub avg_speed_mps: f64,
    pub max_planned_cost_w: f64,
}

/// One telemetry sample. `engine_on` is 0 or 1; `flags` is a bit set with
/// bit `k` for the `k`-th `EcoFlag`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcoTelemetryRow {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub engine_on: c_int,
    pub switches: u32,
    pub energy: f64,
    pub va: f64,
    pub vb: f64,
    pub flags: u32,
}

/// Bit positions of `EcoTelemetryRow::flags`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcoFlag {
    Unreachable = 0,
    InfeasibleSlice = 1,
    PlanFailed = 2,
    SafetyOverride = 3,
    Stalled = 4,
    Timeout = 5,
}

fn flag_bit(f: ecodrive::controller::Flag) -> u32 {
    use ecodrive::controller::Flag;
    let bit = match f {
        Flag::Unreachable => EcoFlag::Unreachable,
        Flag::InfeasibleSlice => EcoFlag::InfeasibleSlice,
        Flag::PlanFailed => EcoFlag::PlanFailed,
        Flag::SafetyOverride => EcoFlag::SafetyOverride,
        Flag::Stalled => EcoFlag::Stalled,
        Flag::Timeout => EcoFlag::Timeout,
    };
    1 << bit as u32
}

/// The reference vehicle with constant 161 W electrical power and switching cost `alpha` (J).
#[no_mangle]
pub unsafe extern "C" fn eco_vehicle_new_reference(alpha: f64, out: *mut *mut EcoVehicle) -> EcoStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let v = Vehicle::virvolt(alpha);
        v.params.validate()?;
        *out = Box::into_raw(Box::new(EcoVehicle(v)));
        Ok(())
    })
}

/// Reads a params JSON file.
#[no_mangle]
pub unsafe extern "C" fn eco_vehicle_load(path: *const c_char, out: *mut *mut EcoVehicle) -> EcoStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let v = harness::files::read_vehicle(Path::new(as_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(EcoVehicle(v)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn eco_vehicle_free(v: *mut EcoVehicle) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Cheapest band averaging `target` on the slice of angle `slope` (rad) and
/// along-track wind `wind` (m/s). Pass `INFINITY` for no safety speed.
#[no_mangle]
pub unsafe extern "C" fn eco_optimal_band(
    vehicle: *const EcoVehicle,
    slope: f64,
    wind: f64,
    target: f64,
    vsafe: f64,
    delta: f64,
    fine: bool,
    out: *mut EcoBand,
) -> EcoStatus {
    guard(|| {
        let v = as_ref(vehicle, "vehicle")?;
        let out = as_mut(out, "out")?;
        let frozen = FrozenDynamics::new(v.0.clone(), slope, wind)?;
        let grid = if fine {
            GridSpec::fine()
        } else {
            GridSpec::coarse()
        };
        *out = ecodrive::optimal_band(&frozen, target, vsafe, &grid, delta)?.into();
        Ok(())
    })
}

/// Speeds where the acceleration vanishes with the engine off and on.
#[no_mangle]
pub unsafe extern "C" fn eco_equilibrium_speeds(
    vehicle: *const EcoVehicle,
    slope: f64,
    wind: f64,
    v_low: *mut f64,
    v_high: *mut f64,
) -> EcoStatus {
    guard(|| {
        let v = as_ref(vehicle, "vehicle")?;
        let (lo, hi) = (as_mut(v_low, "v_low")?, as_mut(v_high, "v_high")?);
        let frozen = FrozenDynamics::new(v.0.clone(), slope, wind)?;
        (*lo, *hi) = ecodrive::equilibrium_speeds(&frozen);
        Ok(())
    })
}

/// Acceleration (m/s²) at speed `x2` on the given slice, engine on when `engine_on` is nonzero.
#[no_mangle]
pub unsafe extern "C" fn eco_acceleration(
    vehicle: *const EcoVehicle,
    slope: f64,
    wind: f64,
    x2: f64,
    engine_on: c_int,
    out: *mut f64,
) -> EcoStatus {
    guard(|| {
        let v = as_ref(vehicle, "vehicle")?;
        let out = as_mut(out, "out")?;
        let u = if engine_on != 0 { Engine::On } else { Engine::Off };
        *out = v.0.accel(x2, slope, wind, u);
        Ok(())
    })
}

/// Reads the scenario directory `dir`.
#[no_mangle]
pub unsafe extern "C" fn eco_scenario_load(dir: *const c_char, out: *mut *mut EcoScenario) -> EcoStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let s = harness::load_scenario(Path::new(as_str(dir, "dir")?), &[])?;
        *out = Box::into_raw(Box::new(EcoScenario(s)));
        Ok(())
    })
}

/// A bundled fixture: `flat16500`, `hill` or `gust`.
#[no_mangle]
pub unsafe extern "C" fn eco_scenario_fixture(name: *const c_char, out: *mut *mut EcoScenario) -> EcoStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let s = harness::fixture(as_str(name, "name")?)?;
        *out = Box::into_raw(Box::new(EcoScenario(s)));
        Ok(())
    })
}

/// Applies a `key=value` override. The scenario is unchanged on failure.
#[no_mangle]
pub unsafe extern "C" fn eco_scenario_set(
    scenario: *mut EcoScenario,
    assignment: *const c_char,
) -> EcoStatus {
    guard(|| {
        let s = as_mut(scenario, "scenario")?;
        let mut next = s.0.clone();
        next.set(as_str(assignment, "assignment")?)?;
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn eco_scenario_free(s: *mut EcoScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Simulates the race of `scenario`.
#[no_mangle]
pub unsafe extern "C" fn eco_race_run(scenario: *const EcoScenario, out: *mut *mut EcoRace) -> EcoStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.0;
        let out = as_mut(out, "out")?;
        let r = ecodrive::run_race(&s.course, &s.vehicle, &s.controller)?;
        *out = Box::into_raw(Box::new(EcoRace(r)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn eco_race_summary(race: *const EcoRace, out: *mut EcoRaceSummary) -> EcoStatus {
    guard(|| {
        let r = &as_ref(race, "race")?.0;
        let out = as_mut(out, "out")?;
        let s = &r.summary;
        *out = EcoRaceSummary {
            finish_time_s: s.finish_time_s.unwrap_or(f64::NAN),
            total_energy_j: s.total_energy_j,
            switches: s.switches,
            min_switch_gap_s: s.min_switch_gap_s.unwrap_or(f64::NAN),
            avg_speed_mps: s.avg_speed_mps,
            max_planned_cost_w: r.max_planned_cost(),
        };
        Ok(())
    })
}

/// Number of telemetry rows; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn eco_race_telemetry_len(race: *const EcoRace) -> usize {
    race.as_ref().map_or(0, |r| r.0.telemetry.len())
}

#[no_mangle]
pub unsafe extern "C" fn eco_race_telemetry_row(
    race: *const EcoRace,
    index: usize,
    out: *mut EcoTelemetryRow,
) -> EcoStatus {
    guard(|| {
        let r = &as_ref(race, "race")?.0;
        let out = as_mut(out, "out")?;
        let row = r.telemetry.get(index).ok_or_else(|| {
            Failure(
                EcoStatus::OutOfRange,
                format!("row {index} out of {} telemetry rows", r.telemetry.len()),
            )
        })?;
        let s = &row.state;
        *out = EcoTelemetryRow {
            t: s.t,
            x1: s.x1,
            x2: s.x2,
            engine_on: c_int::from(s.u == Engine::On),
            switches: s.switches,
            energy: s.energy,
            va: row.va,
            vb: row.vb,
            flags: row.flags.iter().map(|f| flag_bit(*f)).fold(0, |a, b| a | b),
        };
        Ok(())
    })
}

/// Writes telemetry, summary and speed trace of `race` into `dir`.
#[no_mangle]
pub unsafe extern "C" fn eco_race_write_report(
    race: *const EcoRace,
    scenario: *const EcoScenario,
    dir: *const c_char,
) -> EcoStatus {
    guard(|| {
        let r = &as_ref(race, "race")?.0;
        let s = &as_ref(scenario, "scenario")?.0;
        report::emit_report(r, s, Path::new(as_str(dir, "dir")?))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn eco_race_free(r: *mut EcoRace) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
