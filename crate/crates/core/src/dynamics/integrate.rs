use serde::{Deserialize, Serialize};

use super::course::Course;
use super::roots::bisect;
use super::vehicle::{Engine, Vehicle};
use crate::error::{Error, Result};

/// Instantaneous race state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaceState {
    /// Time since the start (s).
    pub t: f64,
    /// Position along the track (m).
    pub x1: f64,
    /// Speed (m/s).
    pub x2: f64,
    pub u: Engine,
    /// Number of off→on transitions, including the initial start.
    pub switches: u32,
    /// Energy consumed so far, switching costs included (J).
    pub energy: f64,
}

impl RaceState {
    /// Standing start with the engine just switched on: one switch, `alpha` spent.
    pub fn start(alpha: f64) -> Self {
        RaceState {
            t: 0.0,
            x1: 0.0,
            x2: 0.0,
            u: Engine::On,
            switches: 1,
            energy: alpha,
        }
    }

    /// At rest with the engine off and nothing spent.
    pub fn at_rest(x1: f64, t: f64) -> Self {
        RaceState {
            t,
            x1,
            x2: 0.0,
            u: Engine::Off,
            switches: 0,
            energy: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x1.is_finite() && self.x2.is_finite() && self.energy.is_finite()
    }
}

/// A speed level at which a step is cut short.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedThreshold {
    pub value: f64,
    /// `true` to stop when the speed rises to `value`, `false` when it falls to it.
    pub rising: bool,
}

/// Optional early-stop conditions for [`integrate_with_limits`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepLimits {
    pub speed: Option<SpeedThreshold>,
    /// Finish line position (m).
    pub finish: Option<f64>,
}

/// Why [`integrate_with_limits`] returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEnd {
    Elapsed,
    SpeedReached,
    Finished,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Event {
    TimeBoundary(f64),
    PositionBoundary(f64),
    Rest,
    Speed(f64),
    Finish(f64),
}

/// Dynamics with slope and wind frozen over one cell of the course.
struct Cell<'a> {
    vehicle: &'a Vehicle,
    slope: f64,
    wind: f64,
    u: Engine,
}

impl Cell<'_> {
    fn accel(&self, x2: f64) -> f64 {
        self.vehicle.accel_forward(x2, self.slope, self.wind, self.u)
    }

    /// Explicit midpoint step of length `tau` for a moving vehicle.
    fn step(&self, s: &RaceState, tau: f64) -> RaceState {
        let k1 = self.accel(s.x2);
        let mid = s.x2 + 0.5 * tau * k1;
        let k2 = self.accel(mid);
        let x2 = s.x2 + tau * k2;
        let power = 0.5 * (self.vehicle.power(s.x2, self.u) + self.vehicle.power(x2.max(0.0), self.u));
        RaceState {
            t: s.t + tau,
            x1: s.x1 + tau * mid,
            x2,
            energy: s.energy + tau * power,
            ..*s
        }
    }

    /// Smallest substep at which `g(step(tau))` changes sign, given that it
    /// does so on `(0, tau_max]`.
    fn locate(&self, s: &RaceState, tau_max: f64, g: impl Fn(&RaceState) -> f64) -> f64 {
        bisect(|tau| g(&self.step(s, tau)), 0.0, tau_max, 0.0)
    }
}

/// Advances the state by `dt` seconds with the engine held at `u`.
///
/// The step is split at slope breakpoints and wind-grid boundaries so that each
/// piece sees constant conditions. A vehicle whose speed reaches zero stops
/// there, and stays at rest as long as the forward acceleration at zero speed
/// is not positive.
pub fn integrate(
    state: &RaceState,
    u: Engine,
    dt: f64,
    course: &Course,
    vehicle: &Vehicle,
) -> Result<RaceState> {
    integrate_with_limits(state, u, dt, course, vehicle, StepLimits::default()).map(|(s, _)| s)
}

/// Same as [`integrate`], but returns early (exactly on the event) when the
/// speed threshold or the finish line in `limits` is reached.
pub fn integrate_with_limits(
    state: &RaceState,
    u: Engine,
    dt: f64,
    course: &Course,
    vehicle: &Vehicle,
    limits: StepLimits,
) -> Result<(RaceState, StepEnd)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {dt}"
        )));
    }
    if !state.is_finite() {
        return Err(Error::NonFinite(format!("{state:?}")));
    }
    course.check_position(state.x1)?;

    let mut s = RaceState { u, ..*state };
    let t_end = s.t + dt;
    for _ in 0..100_000 {
        if s.t >= t_end {
            return Ok((s, StepEnd::Elapsed));
        }
        let remaining = t_end - s.t;
        let (slope, wind) = course.conditions(s.x1, s.t);
        let cell = Cell {
            vehicle,
            slope,
            wind,
            u,
        };
        let time_boundary = course.next_time_boundary(s.t).filter(|b| *b < t_end);

        if s.x2 <= 0.0 {
            s.x2 = 0.0;
            if cell.accel(0.0) <= 0.0 {
                // At rest: wait for the wind to change or the step to end.
                let until = time_boundary.unwrap_or(t_end);
                s.energy += vehicle.power(0.0, u) * (until - s.t);
                s.t = until;
                continue;
            }
        }

        let (mut tau, mut event) = match time_boundary {
            Some(b) => (b - s.t, Some(Event::TimeBoundary(b))),
            None => (remaining, None),
        };
        let trial = cell.step(&s, tau);

        let mut candidates: Vec<(Event, f64)> = Vec::new();
        if let Some(finish) = limits.finish {
            if s.x1 < finish && trial.x1 >= finish {
                let at = cell.locate(&s, tau, |r| r.x1 - finish);
                candidates.push((Event::Finish(finish), at));
            }
        }
        if let Some(xb) = course.next_position_boundary(s.x1) {
            if trial.x1 >= xb {
                let at = cell.locate(&s, tau, |r| r.x1 - xb);
                candidates.push((Event::PositionBoundary(xb), at));
            }
        }
        if let Some(th) = limits.speed {
            let crossed = if th.rising {
                s.x2 < th.value && trial.x2 >= th.value
            } else {
                s.x2 > th.value && trial.x2 <= th.value
            };
            if crossed {
                let at = cell.locate(&s, tau, |r| r.x2 - th.value);
                candidates.push((Event::Speed(th.value), at));
            }
        }
        if s.x2 > 0.0 && trial.x2 <= 0.0 {
            let at = cell.locate(&s, tau, |r| r.x2);
            candidates.push((Event::Rest, at));
        }
        // Earliest event wins; ties keep insertion order (finish first).
        for (ev, at) in candidates {
            if at < tau || (at == tau && !matches!(event, Some(Event::Finish(_)))) {
                tau = at;
                event = Some(ev);
            }
        }

        s = cell.step(&s, tau);
        match event {
            None => s.t = t_end,
            Some(Event::TimeBoundary(b)) => s.t = b,
            Some(Event::PositionBoundary(xb)) => s.x1 = s.x1.max(xb),
            Some(Event::Rest) => s.x2 = 0.0,
            Some(Event::Speed(v)) => {
                s.x2 = v;
                return finish_check(s, StepEnd::SpeedReached);
            }
            Some(Event::Finish(finish)) => {
                s.x1 = finish;
                return finish_check(s, StepEnd::Finished);
            }
        }
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("{s:?}")));
        }
    }
    Err(Error::NonFinite(format!(
        "event cascade did not terminate near t = {} s, x1 = {} m",
        s.t, s.x1
    )))
}

fn finish_check(s: RaceState, end: StepEnd) -> Result<(RaceState, StepEnd)> {
    if s.is_finite() {
        Ok((s, end))
    } else {
        Err(Error::NonFinite(format!("{s:?}")))
    }
}
