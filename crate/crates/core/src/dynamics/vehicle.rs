use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Engine state. `On` applies the traction force and draws power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Engine {
    Off,
    On,
}

impl Engine {
    pub fn from_flag(flag: u8) -> Result<Self> {
        match flag {
            0 => Ok(Engine::Off),
            1 => Ok(Engine::On),
            other => Err(Error::InvalidParameter(format!(
                "engine flag must be 0 or 1, got {other}"
            ))),
        }
    }

    pub fn flag(self) -> u8 {
        match self {
            Engine::Off => 0,
            Engine::On => 1,
        }
    }

    pub fn is_on(self) -> bool {
        self == Engine::On
    }
}

/// Lumped longitudinal constants, all per unit mass except `m` and `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Aerodynamic drag coefficient (1/m).
    pub a: f64,
    /// Solid friction (m/s²).
    pub c: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Traction force per unit mass with the engine on (m/s²).
    pub f1: f64,
    /// Total mass (kg).
    pub m: f64,
    /// Energy charged on every off→on engine transition (J).
    pub alpha: f64,
}

impl VehicleParams {
    /// Identified constants of the Vir'Volt 2 prototype, with a 10 J switch cost.
    pub const VIRVOLT: VehicleParams = VehicleParams {
        a: 6e-4,
        c: 3e-2,
        g: 9.81,
        f1: 0.20,
        m: 93.0,
        alpha: 10.0,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a", self.a),
            ("c", self.c),
            ("g", self.g),
            ("f1", self.f1),
            ("m", self.m),
            ("alpha", self.alpha),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        if self.f1 <= self.c {
            return Err(Error::InvalidParameter(format!(
                "traction f1 = {} must exceed solid friction c = {}",
                self.f1, self.c
            )));
        }
        Ok(())
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::VIRVOLT
    }
}

/// A caller-supplied engine-on power curve `x2 -> watts`.
#[derive(Clone)]
pub struct PowerFn(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl PowerFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PowerFn(Arc::new(f))
    }
}

impl fmt::Debug for PowerFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PowerFn(..)")
    }
}

impl PartialEq for PowerFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Instantaneous power drawn with the engine on. Engine off always draws 0 W.
#[derive(Clone, Debug, PartialEq)]
pub enum PowerModel {
    /// Mechanical power at the wheels, `x2 * m * f1`.
    WheelPower,
    /// Battery draw independent of speed (161 W for the 23 V / 7 A motor).
    ConstantElectrical {
        watts: f64,
    },
    Custom(PowerFn),
}

impl PowerModel {
    pub const DEFAULT_WATTS: f64 = 161.0;

    pub fn constant_electrical() -> Self {
        PowerModel::ConstantElectrical {
            watts: Self::DEFAULT_WATTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let PowerModel::ConstantElectrical { watts } = self {
            if !(watts.is_finite() && *watts > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "constant_watts must be strictly positive, got {watts}"
                )));
            }
        }
        Ok(())
    }
}

/// How the aerodynamic term depends on the relative air speed `w = x2 - v`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DragForm {
    /// `-a w²`, as identified for the prototype.
    #[default]
    Literal,
    /// `-a w |w|`, which pushes forward under an overtaking tailwind.
    Signed,
}

/// Everything the params file describes: constants, power model, drag form.
#[derive(Clone, Debug, PartialEq)]
pub struct Vehicle {
    pub params: VehicleParams,
    pub power: PowerModel,
    pub drag: DragForm,
}

impl Vehicle {
    pub fn new(params: VehicleParams, power: PowerModel, drag: DragForm) -> Result<Self> {
        params.validate()?;
        power.validate()?;
        Ok(Vehicle { params, power, drag })
    }

    /// Vir'Volt constants with the given switch cost and the 161 W power model.
    pub fn virvolt(alpha: f64) -> Self {
        Vehicle {
            params: VehicleParams {
                alpha,
                ..VehicleParams::VIRVOLT
            },
            power: PowerModel::constant_electrical(),
            drag: DragForm::Literal,
        }
    }

    pub fn with_power(mut self, power: PowerModel) -> Self {
        self.power = power;
        self
    }

    /// Acceleration at speed `x2` for a given slope angle and along-track wind.
    ///
    /// `sign(0)` is taken as 0, so a vehicle at rest feels no friction.
    pub fn accel(&self, x2: f64, slope: f64, wind: f64, u: Engine) -> f64 {
        self.accel_with_sign(x2, sign(x2), slope, wind, u)
    }

    /// Right limit of the acceleration at `x2 >= 0`: friction opposes forward
    /// motion even at exactly zero speed.
    pub fn accel_forward(&self, x2: f64, slope: f64, wind: f64, u: Engine) -> f64 {
        self.accel_with_sign(x2, 1.0, slope, wind, u)
    }

    fn accel_with_sign(&self, x2: f64, sgn: f64, slope: f64, wind: f64, u: Engine) -> f64 {
        let p = &self.params;
        let w = x2 - wind;
        let drag = match self.drag {
            DragForm::Literal => p.a * w * w,
            DragForm::Signed => p.a * w * w.abs(),
        };
        let traction = if u.is_on() { p.f1 } else { 0.0 };
        -drag - p.c * sgn - p.g * slope.sin() + traction
    }

    pub fn power(&self, x2: f64, u: Engine) -> f64 {
        if !u.is_on() {
            return 0.0;
        }
        match &self.power {
            PowerModel::WheelPower => x2 * self.params.m * self.params.f1,
            PowerModel::ConstantElectrical { watts } => *watts,
            PowerModel::Custom(h) => (h.0)(x2),
        }
    }
}

impl Default for Vehicle {
    fn default() -> Self {
        Vehicle::virvolt(VehicleParams::VIRVOLT.alpha)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_non_positive_constants() {
        let mut p = VehicleParams::VIRVOLT;
        p.a = 0.0;
        assert!(p.validate().is_err());
        let mut p = VehicleParams::VIRVOLT;
        p.alpha = -1.0;
        assert!(p.validate().is_err());
        let mut p = VehicleParams::VIRVOLT;
        p.f1 = p.c;
        assert!(p.validate().is_err());
        assert!(VehicleParams::VIRVOLT.validate().is_ok());
    }

    #[test]
    fn signed_drag_flips_under_strong_tailwind() {
        let mut v = Vehicle::virvolt(10.0);
        let literal = v.accel(2.0, 0.0, 10.0, Engine::Off);
        v.drag = DragForm::Signed;
        let signed = v.accel(2.0, 0.0, 10.0, Engine::Off);
        assert_relative_eq!(literal, -6e-4 * 64.0 - 0.03, epsilon = 1e-15);
        assert_relative_eq!(signed, 6e-4 * 64.0 - 0.03, epsilon = 1e-15);
    }

    #[test]
    fn custom_power_is_used_only_when_on() {
        let v = Vehicle::virvolt(10.0).with_power(PowerModel::Custom(PowerFn::new(|x| 2.0 * x)));
        assert_eq!(v.power(3.0, Engine::On), 6.0);
        assert_eq!(v.power(3.0, Engine::Off), 0.0);
    }

    #[test]
    fn engine_flag_round_trip() {
        assert_eq!(Engine::from_flag(1).unwrap(), Engine::On);
        assert_eq!(Engine::On.flag(), 1);
        assert!(Engine::from_flag(2).is_err());
    }
}
