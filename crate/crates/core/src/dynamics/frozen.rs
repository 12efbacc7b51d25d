use super::course::Course;
use super::roots::bisect;
use super::vehicle::{Engine, Vehicle};
use crate::error::{Error, Result};

/// Upper end of the bracket used when searching equilibrium speeds (m/s).
pub const SPEED_BRACKET_MAX: f64 = 100.0;

/// The dynamics at one position and instant, with slope and wind held fixed:
/// an autonomous scalar system `x' = f(x, u)` on which the quadrature and the
/// band optimizer operate.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenDynamics {
    vehicle: Vehicle,
    slope: f64,
    wind: f64,
    v_low: f64,
    v_high: f64,
    sticking: bool,
}

impl FrozenDynamics {
    pub fn new(vehicle: Vehicle, slope: f64, wind: f64) -> Result<Self> {
        if !slope.is_finite() || !wind.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "slope ({slope}) and wind ({wind}) must be finite"
            )));
        }
        let mut frozen = FrozenDynamics {
            vehicle,
            slope,
            wind,
            v_low: 0.0,
            v_high: 0.0,
            sticking: false,
        };

        let engine_on = |x: f64| frozen.f_forward(x, Engine::On);
        if engine_on(0.0) <= 0.0 {
            return Err(Error::InfeasibleSlice(format!(
                "engine cannot move the vehicle from rest (f(0+, 1) = {:.6e} m/s²)",
                engine_on(0.0)
            )));
        }
        if engine_on(SPEED_BRACKET_MAX) >= 0.0 {
            return Err(Error::InfeasibleSlice(format!(
                "no engine-on equilibrium below {SPEED_BRACKET_MAX} m/s"
            )));
        }
        let v_high = bisect(engine_on, 0.0, SPEED_BRACKET_MAX, 0.0);

        let engine_off = |x: f64| frozen.f_forward(x, Engine::Off);
        let (v_low, sticking) = if engine_off(0.0) > 0.0 {
            if engine_off(SPEED_BRACKET_MAX) >= 0.0 {
                return Err(Error::InfeasibleSlice(format!(
                    "no engine-off equilibrium below {SPEED_BRACKET_MAX} m/s"
                )));
            }
            (bisect(engine_off, 0.0, SPEED_BRACKET_MAX, 0.0), false)
        } else {
            (0.0, true)
        };

        if v_low >= v_high {
            return Err(Error::InfeasibleSlice(format!(
                "coasting equilibrium {v_low} m/s is not below the engine equilibrium {v_high} m/s"
            )));
        }
        frozen.v_low = v_low;
        frozen.v_high = v_high;
        frozen.sticking = sticking;
        Ok(frozen)
    }

    /// Flat, windless slice.
    pub fn flat(vehicle: Vehicle) -> Result<Self> {
        Self::new(vehicle, 0.0, 0.0)
    }

    /// `f(x, u)` with `sign(0) = 0`.
    pub fn f(&self, x: f64, u: Engine) -> f64 {
        self.vehicle.accel(x, self.slope, self.wind, u)
    }

    /// `f(x⁺, u)`: friction always opposes forward motion.
    pub fn f_forward(&self, x: f64, u: Engine) -> f64 {
        self.vehicle.accel_forward(x, self.slope, self.wind, u)
    }

    pub fn h(&self, x: f64, u: Engine) -> f64 {
        self.vehicle.power(x, u)
    }

    pub fn vehicle(&self) -> &Vehicle {
        &self.vehicle
    }

    pub fn alpha(&self) -> f64 {
        self.vehicle.params.alpha
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn wind(&self) -> f64 {
        self.wind
    }

    /// Rest speed of the engine-off mode.
    pub fn v_low(&self) -> f64 {
        self.v_low
    }

    /// Rest speed of the engine-on mode.
    pub fn v_high(&self) -> f64 {
        self.v_high
    }

    /// True when `v_low` is the zero-speed sticking point rather than a root
    /// of `f(., 0)`.
    pub fn is_sticking(&self) -> bool {
        self.sticking
    }

    /// Equilibrium speed of mode `u`.
    pub fn equilibrium(&self, u: Engine) -> f64 {
        match u {
            Engine::On => self.v_high,
            Engine::Off => self.v_low,
        }
    }
}

/// Autonomous slice of the course dynamics at `(x1, t)`.
pub fn freeze(course: &Course, vehicle: &Vehicle, x1: f64, t: f64) -> Result<FrozenDynamics> {
    course.check_position(x1)?;
    let (slope, wind) = course.conditions(x1, t);
    FrozenDynamics::new(vehicle.clone(), slope, wind)
}

/// `(V_low, V_high)`: rest speeds with the engine off and on.
pub fn equilibrium_speeds(frozen: &FrozenDynamics) -> (f64, f64) {
    (frozen.v_low(), frozen.v_high())
}
