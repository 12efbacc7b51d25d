//! Switched longitudinal dynamics of a two-mode vehicle.
//!
//! `x1' = x2`, `x2' = -a (x2 - v)² - c sign(x2) - g sin θ + f1 u`, where `v`
//! is the along-track wind and `θ` the local slope. See [`Vehicle::accel`].

mod assumptions;
mod course;
mod frozen;
mod integrate;
pub(crate) mod roots;
mod vehicle;

pub use assumptions::{check_assumptions, AssumptionReport, Curvature, ItemCheck, Verdict};
pub use course::{Breakpoint, Course, TrackProfile, WindField};
pub use frozen::{equilibrium_speeds, freeze, FrozenDynamics, SPEED_BRACKET_MAX};
pub use integrate::{integrate, integrate_with_limits, RaceState, SpeedThreshold, StepEnd, StepLimits};
pub use vehicle::{DragForm, Engine, PowerFn, PowerModel, Vehicle, VehicleParams};

use crate::error::Result;

/// Acceleration of the vehicle at position `x1`, speed `x2` and time `t`.
pub fn acceleration(x1: f64, x2: f64, t: f64, u: Engine, vehicle: &Vehicle, course: &Course) -> Result<f64> {
    course.check_position(x1)?;
    let (slope, wind) = course.conditions(x1, t);
    Ok(vehicle.accel(x2, slope, wind, u))
}

/// Power drawn at speed `x2` (W).
pub fn power(x2: f64, u: Engine, vehicle: &Vehicle) -> f64 {
    vehicle.power(x2, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn acceleration_examples() {
        let course = Course::flat(100.0, 12.0).unwrap();
        let v = Vehicle::virvolt(10.0);
        // just above rest with the engine on: f1 - c
        let a = acceleration(0.0, 1e-300, 0.0, Engine::On, &v, &course).unwrap();
        assert_relative_eq!(a, 0.17, epsilon = 1e-12);
        assert_eq!(
            acceleration(0.0, 0.0, 0.0, Engine::Off, &v, &course).unwrap(),
            0.0
        );
        let a = acceleration(50.0, 7.0, 0.0, Engine::Off, &v, &course).unwrap();
        assert_relative_eq!(a, -0.0594, epsilon = 1e-12);
        assert!(acceleration(-1.0, 7.0, 0.0, Engine::Off, &v, &course).is_err());
    }

    #[test]
    fn power_examples() {
        let v = Vehicle::virvolt(10.0);
        assert_eq!(power(7.0, Engine::Off, &v), 0.0);
        assert_eq!(power(7.0, Engine::On, &v), 161.0);
        assert_eq!(power(2.0, Engine::On, &v), 161.0);
        let wheel = v.with_power(PowerModel::WheelPower);
        assert_relative_eq!(power(7.0, Engine::On, &wheel), 130.2, epsilon = 1e-12);
        assert_eq!(power(7.0, Engine::Off, &wheel), 0.0);
    }
}
