//! Receding-horizon race controller.
//!
//! Every `t_a` seconds the target average speed is recomputed from the
//! remaining distance and time, the dynamics are frozen at the current
//! position and an oscillation band is chosen for them. Between replans a
//! hysteresis relay switches the engine off at the top of the band and back
//! on at the bottom.

mod race;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::dynamics::RaceState;
use crate::dynamics::{freeze, Course, Engine, Vehicle};
use crate::error::{Error, Result};
use crate::optimizer::{optimal_band, BandKind, GridSpec, OscillationBand, DEFAULT_DELTA};

pub use race::{min_switch_interval, run_race, RaceResult, RaceSummary, TelemetryRow, TraceRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Time between replans (s).
    pub replan_interval: f64,
    /// Width of a band clamped under the safety speed (m/s).
    pub delta: f64,
    /// Race length (m); the track length when absent.
    pub length: Option<f64>,
    /// Scheduled race duration (s).
    pub duration: f64,
    pub grid: GridSpec,
    /// Integrator step (s).
    pub dt: f64,
    /// Tolerated excess over the safety speed (m/s).
    pub overshoot_slack: f64,
    /// The simulation stops at `hard_cap * duration`.
    pub hard_cap: f64,
    /// Sampling period of the speed trace (s).
    pub trace_interval: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            replan_interval: 3.0,
            delta: DEFAULT_DELTA,
            length: None,
            duration: 2357.0,
            grid: GridSpec::coarse(),
            dt: 1e-3,
            overshoot_slack: 0.2,
            hard_cap: 1.2,
            trace_interval: 1.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("replan_interval", self.replan_interval),
            ("delta", self.delta),
            ("duration", self.duration),
            ("dt", self.dt),
            ("trace_interval", self.trace_interval),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.dt >= self.replan_interval {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be smaller than the replan interval {}",
                self.dt, self.replan_interval
            )));
        }
        if !(self.overshoot_slack >= 0.0) {
            return Err(Error::InvalidParameter(
                "overshoot_slack must be non-negative".into(),
            ));
        }
        if !(self.hard_cap >= 1.0) {
            return Err(Error::InvalidParameter("hard_cap must be at least 1".into()));
        }
        if let Some(l) = self.length {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "length must be non-negative, got {l}"
                )));
            }
        }
        self.grid.validate()
    }

    /// Race length on `course`.
    pub fn race_length(&self, course: &Course) -> Result<f64> {
        let length = self.length.unwrap_or_else(|| course.length());
        if length > course.length() {
            return Err(Error::InvalidParameter(format!(
                "race length {length} m exceeds the track length {} m",
                course.length()
            )));
        }
        Ok(length)
    }
}

/// Conditions worth reporting next to a plan or a telemetry row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The target average speed is not below `V_high` of the current slice.
    Unreachable,
    /// The engine cannot move the vehicle on the current slice.
    InfeasibleSlice,
    /// No candidate band was found; a narrow band around the target is used.
    PlanFailed,
    /// Engine forced off above the safety speed.
    SafetyOverride,
    /// Stuck at rest with the engine on for longer than a replan interval.
    Stalled,
    /// Simulation cut at the hard time cap.
    Timeout,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Unreachable => "unreachable",
            Flag::InfeasibleSlice => "infeasible_slice",
            Flag::PlanFailed => "plan_failed",
            Flag::SafetyOverride => "safety_override",
            Flag::Stalled => "stalled",
            Flag::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Flag> {
        [
            Flag::Unreachable,
            Flag::InfeasibleSlice,
            Flag::PlanFailed,
            Flag::SafetyOverride,
            Flag::Stalled,
            Flag::Timeout,
        ]
        .into_iter()
        .find(|f| f.as_str() == s)
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The outcome of one replan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub t: f64,
    pub x1: f64,
    /// Remaining distance over remaining time (m/s).
    pub target: f64,
    pub vsafe: f64,
    pub band: OscillationBand,
    pub flag: Option<Flag>,
}

/// Target average speed for the rest of the race.
pub fn target_speed(x1: f64, t: f64, length: f64, duration: f64) -> f64 {
    let remaining_time = duration - t;
    if remaining_time <= 0.0 {
        return f64::INFINITY;
    }
    (length - x1) / remaining_time
}

fn plain_band(va: f64, vb: f64, kind: BandKind) -> OscillationBand {
    OscillationBand {
        va,
        vb,
        dwell: 0.0,
        rest_dwell: 0.0,
        period: f64::NAN,
        distance: f64::NAN,
        energy: f64::NAN,
        avg_cost: f64::NAN,
        kind,
    }
}

/// Band for the remainder of the race from `state`.
pub fn replan(state: &RaceState, course: &Course, vehicle: &Vehicle, cfg: &ControllerConfig) -> Result<Plan> {
    let length = cfg.race_length(course)?;
    let target = target_speed(state.x1, state.t, length, cfg.duration);
    let vsafe = course.vsafe_at(state.x1);
    let plan = |band, flag| Plan {
        t: state.t,
        x1: state.x1,
        target,
        vsafe,
        band,
        flag,
    };
    let frozen = match freeze(course, vehicle, state.x1, state.t) {
        Ok(f) => f,
        Err(Error::InfeasibleSlice(_)) => {
            // full effort: the relay only lets go above the safety speed
            let band = plain_band(vsafe - cfg.delta, vsafe, BandKind::Unreachable);
            return Ok(plan(band, Some(Flag::InfeasibleSlice)));
        }
        Err(e) => return Err(e),
    };
    if target >= frozen.v_high() {
        let mut band = OscillationBand::unreachable(&frozen, cfg.delta);
        if band.vb > vsafe {
            band.vb = vsafe;
            band.va = (vsafe - cfg.delta).max(frozen.v_low());
        }
        return Ok(plan(band, Some(Flag::Unreachable)));
    }
    if target >= vsafe {
        return Ok(plan(OscillationBand::clamped(&frozen, vsafe, cfg.delta), None));
    }
    match optimal_band(&frozen, target, vsafe, &cfg.grid, cfg.delta) {
        Ok(band) => Ok(plan(band, None)),
        Err(Error::InfeasibleCandidate(_)) => {
            let half = 0.25 * cfg.delta;
            let vb = (target + half).min(vsafe).min(frozen.v_high());
            let band = plain_band((target - half).max(frozen.v_low()), vb, BandKind::Oscillating);
            Ok(plan(band, Some(Flag::PlanFailed)))
        }
        Err(e) => Err(e),
    }
}

/// Hysteresis relay: engine off once the speed reaches `vb`, back on once it
/// falls to `va`. An off→on transition counts one switch and charges `alpha`.
pub fn switch_logic(state: &RaceState, band: &OscillationBand, alpha: f64) -> RaceState {
    let u = match (state.u, band.kind) {
        (_, BandKind::Coast) => Engine::Off,
        (Engine::On, _) if state.x2 >= band.vb => Engine::Off,
        (Engine::Off, _) if state.x2 <= band.va => Engine::On,
        (u, _) => u,
    };
    let mut next = *state;
    if state.u == Engine::Off && u == Engine::On {
        next.switches += 1;
        next.energy += alpha;
    }
    next.u = u;
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn band(va: f64, vb: f64) -> OscillationBand {
        plain_band(va, vb, BandKind::Oscillating)
    }

    fn moving(x2: f64, u: Engine) -> RaceState {
        RaceState {
            x2,
            u,
            ..RaceState::start(10.0)
        }
    }

    #[test]
    fn relay_turns_off_at_top() {
        let next = switch_logic(&moving(7.94, Engine::On), &band(6.1, 7.94), 10.0);
        assert_eq!(next.u, Engine::Off);
        assert_eq!(next.switches, 1);
    }

    #[test]
    fn relay_holds_inside_band() {
        let s = moving(7.0, Engine::Off);
        assert_eq!(switch_logic(&s, &band(6.1, 7.94), 10.0), s);
        let s = moving(7.0, Engine::On);
        assert_eq!(switch_logic(&s, &band(6.1, 7.94), 10.0), s);
    }

    #[test]
    fn relay_turns_on_at_bottom_and_pays() {
        let s = moving(6.1, Engine::Off);
        let next = switch_logic(&s, &band(6.1, 7.94), 10.0);
        assert_eq!(next.u, Engine::On);
        assert_eq!(next.switches, s.switches + 1);
        assert_eq!(next.energy, s.energy + 10.0);
    }

    #[test]
    fn target_speed_examples() {
        assert_relative_eq!(target_speed(0.0, 0.0, 16_500.0, 2357.0), 7.0, epsilon = 1e-3);
        assert_relative_eq!(
            target_speed(8250.0, 1178.5, 16_500.0, 2357.0),
            target_speed(0.0, 0.0, 16_500.0, 2357.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            target_speed(8250.0, 1238.5, 16_500.0, 2357.0),
            7.38,
            epsilon = 5e-3
        );
    }

    #[test]
    fn replan_at_start() {
        let course = Course::flat(16_500.0, 12.0).unwrap();
        let cfg = ControllerConfig::default();
        let plan = replan(&RaceState::start(10.0), &course, &Vehicle::virvolt(10.0), &cfg).unwrap();
        assert_relative_eq!(plan.target, 7.0, epsilon = 1e-3);
        assert!(plan.band.va < 7.0 && plan.band.vb > 7.0);
        assert_eq!(plan.flag, None);
    }

    #[test]
    fn replan_flags_unreachable_target() {
        let course = Course::flat(16_500.0, 30.0).unwrap();
        let cfg = ControllerConfig {
            duration: 500.0,
            ..ControllerConfig::default()
        };
        let plan = replan(&RaceState::start(10.0), &course, &Vehicle::virvolt(10.0), &cfg).unwrap();
        assert_eq!(plan.flag, Some(Flag::Unreachable));
        assert_eq!(plan.band.kind, BandKind::Unreachable);
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig::default().validate().is_ok());
        let bad = ControllerConfig {
            dt: 5.0,
            ..ControllerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
