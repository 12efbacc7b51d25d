//! Time, distance and energy between two speeds under a constant engine mode,
//! obtained by integrating in the speed variable:
//!
//! ```text
//! t = ∫ ds / f(s,u)    d = ∫ s ds / f(s,u)    e = ∫ h(s,u) ds / f(s,u)
//! ```
//!
//! An endpoint sitting on the equilibrium of the active mode makes the
//! integrand singular. Such integrals are evaluated as improper integrals and
//! may come out as [`Quantity::Infinite`] (for instance the time needed to
//! reach an equilibrium approached exponentially).

pub mod adaptive;

use serde::{Deserialize, Serialize};

pub use adaptive::{Estimate, Tolerance};

use crate::dynamics::{Engine, FrozenDynamics};
use crate::error::{Error, Result};

/// Endpoints closer than this to an equilibrium are treated as singular (m/s).
pub const SINGULAR_ENDPOINT_TOL: f64 = 1e-9;
/// First truncation distance, relative to `V_high - V_low`.
pub const TRUNCATION_REL: f64 = 1e-6;
/// Ratio between consecutive truncation distances.
const TRUNCATION_STEP: f64 = 100.0;

/// Value of an integral that may diverge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Quantity {
    Finite(f64),
    Infinite,
}

impl Quantity {
    /// The value, with divergence mapped to `+inf`.
    pub fn value(self) -> f64 {
        match self {
            Quantity::Finite(v) => v,
            Quantity::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Quantity::Finite(v) => Some(v),
            Quantity::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Quantity::Infinite)
    }
}

/// A monotone speed excursion from `v0` to `v1` with the engine held at `u`.
#[derive(Clone, Copy, Debug)]
pub struct SpeedSegment<'a> {
    frozen: &'a FrozenDynamics,
    u: Engine,
    v0: f64,
    v1: f64,
}

impl<'a> SpeedSegment<'a> {
    pub fn new(frozen: &'a FrozenDynamics, u: Engine, v0: f64, v1: f64) -> Result<Self> {
        if !(v0.is_finite() && v1.is_finite()) {
            return Err(Error::InvalidSegment(format!("non-finite speeds {v0} -> {v1}")));
        }
        let (lo, hi) = (frozen.v_low(), frozen.v_high());
        for v in [v0, v1] {
            if v < lo - SINGULAR_ENDPOINT_TOL || v > hi + SINGULAR_ENDPOINT_TOL {
                return Err(Error::InvalidSegment(format!(
                    "speed {v} m/s outside [{lo}, {hi}] m/s"
                )));
            }
        }
        let wrong_way = match u {
            Engine::On => v1 < v0,
            Engine::Off => v1 > v0,
        };
        if wrong_way {
            return Err(Error::InvalidSegment(format!(
                "engine {} cannot take the speed from {v0} to {v1} m/s",
                u.flag()
            )));
        }
        let seg = SpeedSegment { frozen, u, v0, v1 };
        seg.check_no_interior_root()?;
        Ok(seg)
    }

    pub fn frozen(&self) -> &FrozenDynamics {
        self.frozen
    }

    pub fn engine(&self) -> Engine {
        self.u
    }

    pub fn speeds(&self) -> (f64, f64) {
        (self.v0, self.v1)
    }

    fn check_no_interior_root(&self) -> Result<()> {
        if self.v0 == self.v1 {
            return Ok(());
        }
        let expected_positive = self.u.is_on();
        const SAMPLES: usize = 32;
        for i in 1..SAMPLES {
            let s = self.v0 + (self.v1 - self.v0) * i as f64 / SAMPLES as f64;
            let f = self.frozen.f_forward(s, self.u);
            if f == 0.0 || (f > 0.0) != expected_positive {
                return Err(Error::InvalidSegment(format!(
                    "acceleration vanishes or changes sign at {s} m/s inside the segment"
                )));
            }
        }
        Ok(())
    }

    fn singular(&self, v: f64) -> bool {
        let eq = self.frozen.equilibrium(self.u);
        let at_rest_point = self.u == Engine::Off && self.frozen.is_sticking();
        !at_rest_point && (v - eq).abs() < SINGULAR_ENDPOINT_TOL
    }

    /// `∫_{v0}^{v1} weight(s) / f(s, u) ds`.
    pub fn integral(&self, weight: impl Fn(f64) -> f64, tol: Tolerance) -> Result<Quantity> {
        if self.v0 == self.v1 {
            return Ok(Quantity::Finite(0.0));
        }
        let frozen = self.frozen;
        let u = self.u;
        let integrand = |s: f64| weight(s) / frozen.f_forward(s, u);
        let eq = frozen.equilibrium(u);
        let eps0 = TRUNCATION_REL * (frozen.v_high() - frozen.v_low());
        improper(
            &integrand,
            self.v0,
            self.v1,
            self.singular(self.v0).then_some(eq),
            self.singular(self.v1).then_some(eq),
            eps0,
            tol,
        )
    }
}

/// `∫_a^b g`, where `sing_a` / `sing_b` carry the location of a singularity
/// sitting at (or within tolerance of) that endpoint.
fn improper(
    g: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    sing_a: Option<f64>,
    sing_b: Option<f64>,
    eps0: f64,
    tol: Tolerance,
) -> Result<Quantity> {
    match (sing_a, sing_b) {
        (None, None) => Ok(Quantity::Finite(adaptive::integrate(g, a, b, tol)?.value)),
        (Some(_), Some(_)) => {
            let mid = 0.5 * (a + b);
            let left = improper(g, a, mid, sing_a, None, eps0, tol)?;
            let right = improper(g, mid, b, None, sing_b, eps0, tol)?;
            Ok(match (left, right) {
                (Quantity::Finite(l), Quantity::Finite(r)) => Quantity::Finite(l + r),
                _ => Quantity::Infinite,
            })
        }
        (Some(sa), None) => {
            // mirror so the singular end is the upper limit
            let flipped = improper(g, b, a, None, Some(sa), eps0, tol)?;
            Ok(match flipped {
                Quantity::Finite(v) => Quantity::Finite(-v),
                Quantity::Infinite => Quantity::Infinite,
            })
        }
        (None, Some(sb)) => truncated_tail(g, a, sb, eps0, tol),
    }
}

/// `∫_a^{sb} g` with `g` singular at `sb`, by truncating at three distances
/// `eps, eps/100, eps/10⁴` from the singularity and comparing the increments.
/// Increments that fail to shrink signal divergence; otherwise the geometric
/// tail is added back.
fn truncated_tail(g: &impl Fn(f64) -> f64, a: f64, sb: f64, eps0: f64, tol: Tolerance) -> Result<Quantity> {
    let dir = (sb - a).signum();
    let span = (sb - a).abs();
    if span == 0.0 {
        return Ok(Quantity::Finite(0.0));
    }
    let eps = eps0.min(0.25 * span);
    let cut = |k: i32| sb - dir * eps / TRUNCATION_STEP.powi(k);
    let body = adaptive::integrate(g, a, cut(0), tol)?.value;
    let d1 = adaptive::integrate(g, cut(0), cut(1), tol)?.value;
    let d2 = adaptive::integrate(g, cut(1), cut(2), tol)?.value;
    let partial = body + d1 + d2;
    if d1 == 0.0 || d1.abs() <= f64::EPSILON * partial.abs() {
        return Ok(Quantity::Finite(partial));
    }
    let ratio = d2 / d1;
    if !(ratio.abs() < 0.5) {
        return Ok(Quantity::Infinite);
    }
    Ok(Quantity::Finite(partial + d2 * ratio / (1.0 - ratio)))
}

/// Time to go from `v0` to `v1` (s).
pub fn elapsed_time(seg: &SpeedSegment) -> Result<Quantity> {
    seg.integral(|_| 1.0, Tolerance::DEFAULT)
}

/// Distance covered while going from `v0` to `v1` (m).
pub fn covered_length(seg: &SpeedSegment) -> Result<Quantity> {
    seg.integral(|s| s, Tolerance::DEFAULT)
}

/// Energy drawn while going from `v0` to `v1` (J); zero with the engine off.
pub fn energy_used(seg: &SpeedSegment) -> Result<Quantity> {
    if !seg.engine().is_on() {
        return Ok(Quantity::Finite(0.0));
    }
    let frozen = seg.frozen();
    seg.integral(|s| frozen.h(s, Engine::On), Tolerance::DEFAULT)
}

/// One period of an oscillation: accelerate `va -> vb`, optionally hold `vb`
/// (only possible at `V_high`), coast back to `va`, optionally rest at `va`
/// (only possible at `V_low`). Infinite phases show up as `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    pub t_up: f64,
    pub t_down: f64,
    pub dwell: f64,
    pub rest_dwell: f64,
    pub d_up: f64,
    pub d_down: f64,
    pub e_up: f64,
    /// Full period `t_up + dwell + t_down + rest_dwell` (s).
    pub period: f64,
    /// Distance per period (m).
    pub distance: f64,
    /// Energy per period including one switching cost (J).
    pub energy: f64,
}

impl PeriodStats {
    pub fn average_speed(&self) -> f64 {
        self.distance / self.period
    }

    pub fn average_cost(&self) -> f64 {
        self.energy / self.period
    }
}

/// Period statistics of the band `(va, vb)` with `dwell` seconds at `vb`.
pub fn period_stats(frozen: &FrozenDynamics, va: f64, vb: f64, dwell: f64) -> Result<PeriodStats> {
    if !(va > frozen.v_low()) {
        return Err(Error::InvalidSegment(format!(
            "lower speed {va} m/s must exceed V_low = {} m/s",
            frozen.v_low()
        )));
    }
    cycle_stats(frozen, va, vb, dwell, 0.0)
}

pub(crate) fn cycle_stats(
    frozen: &FrozenDynamics,
    va: f64,
    vb: f64,
    dwell: f64,
    rest_dwell: f64,
) -> Result<PeriodStats> {
    if !(va < vb) {
        return Err(Error::InvalidSegment(format!(
            "band must satisfy va < vb, got ({va}, {vb})"
        )));
    }
    if !(dwell >= 0.0 && rest_dwell >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dwell times must be non-negative, got {dwell} and {rest_dwell}"
        )));
    }
    if dwell > 0.0 && (vb - frozen.v_high()).abs() > SINGULAR_ENDPOINT_TOL {
        return Err(Error::InvalidParameter(
            "a dwell at the upper speed is only possible at V_high".into(),
        ));
    }
    if rest_dwell > 0.0 && (va - frozen.v_low()).abs() > SINGULAR_ENDPOINT_TOL {
        return Err(Error::InvalidParameter(
            "a rest dwell at the lower speed is only possible at V_low".into(),
        ));
    }
    let up = SpeedSegment::new(frozen, Engine::On, va, vb)?;
    let down = SpeedSegment::new(frozen, Engine::Off, vb, va)?;
    let t_up = elapsed_time(&up)?.value();
    let d_up = covered_length(&up)?.value();
    let e_up = energy_used(&up)?.value();
    let t_down = elapsed_time(&down)?.value();
    let d_down = covered_length(&down)?.value();
    let period = t_up + dwell + t_down + rest_dwell;
    let distance = d_up + vb * dwell + d_down + va * rest_dwell;
    let energy = e_up + frozen.h(vb, Engine::On) * dwell + frozen.alpha();
    Ok(PeriodStats {
        t_up,
        t_down,
        dwell,
        rest_dwell,
        d_up,
        d_down,
        e_up,
        period,
        distance,
        energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{PowerModel, Vehicle};
    use approx::assert_relative_eq;

    const A: f64 = 6e-4;
    const C: f64 = 0.03;

    fn vh() -> f64 {
        (0.17f64 / A).sqrt()
    }

    // Closed-form antiderivative oracles on the flat, windless slice.
    fn t_up(x: f64, y: f64) -> f64 {
        ((y / vh()).atanh() - (x / vh()).atanh()) / (A * vh())
    }
    fn d_up(x: f64, y: f64) -> f64 {
        -((vh() * vh() - y * y) / (vh() * vh() - x * x)).ln() / (2.0 * A)
    }
    fn t_down(x: f64, y: f64) -> f64 {
        let k = (C / A).sqrt();
        ((x / k).atan() - (y / k).atan()) / (A * C).sqrt()
    }
    fn d_down(x: f64, y: f64) -> f64 {
        ((A * x * x + C) / (A * y * y + C)).ln() / (2.0 * A)
    }

    fn flat() -> FrozenDynamics {
        FrozenDynamics::flat(Vehicle::virvolt(10.0)).unwrap()
    }

    #[test]
    fn empty_segment_is_zero() {
        let f = flat();
        let seg = SpeedSegment::new(&f, Engine::On, 7.0, 7.0).unwrap();
        assert_eq!(elapsed_time(&seg).unwrap(), Quantity::Finite(0.0));
        assert_eq!(covered_length(&seg).unwrap(), Quantity::Finite(0.0));
        assert_eq!(energy_used(&seg).unwrap(), Quantity::Finite(0.0));
    }

    #[test]
    fn acceleration_segment_matches_closed_forms() {
        let f = flat();
        let seg = SpeedSegment::new(&f, Engine::On, 6.1, 7.94).unwrap();
        let t = elapsed_time(&seg).unwrap().value();
        assert_relative_eq!(t, t_up(6.1, 7.94), max_relative = 1e-8);
        assert_relative_eq!(t, 13.1317, max_relative = 1e-4);
        let d = covered_length(&seg).unwrap().value();
        assert_relative_eq!(d, d_up(6.1, 7.94), max_relative = 1e-8);
        assert_relative_eq!(d, 92.4076, max_relative = 1e-4);
        let e = energy_used(&seg).unwrap().value();
        assert_relative_eq!(e, 161.0 * t_up(6.1, 7.94), max_relative = 1e-8);
        assert_relative_eq!(e, 2114.2, max_relative = 1e-3);
    }

    #[test]
    fn coasting_segment_matches_closed_forms() {
        let f = flat();
        let seg = SpeedSegment::new(&f, Engine::Off, 7.94, 6.1).unwrap();
        assert_relative_eq!(
            elapsed_time(&seg).unwrap().value(),
            t_down(7.94, 6.1),
            max_relative = 1e-8
        );
        let d = covered_length(&seg).unwrap().value();
        assert_relative_eq!(d, d_down(7.94, 6.1), max_relative = 1e-8);
        assert_relative_eq!(d, 216.212, max_relative = 1e-4);
        assert_eq!(energy_used(&seg).unwrap(), Quantity::Finite(0.0));
    }

    #[test]
    fn reaching_v_high_takes_forever() {
        let f = flat();
        let seg = SpeedSegment::new(&f, Engine::On, 6.1, f.v_high()).unwrap();
        assert_eq!(elapsed_time(&seg).unwrap(), Quantity::Infinite);
        assert_eq!(covered_length(&seg).unwrap(), Quantity::Infinite);
    }

    #[test]
    fn coasting_to_rest_is_finite() {
        let f = flat();
        let seg = SpeedSegment::new(&f, Engine::Off, 7.0, 0.0).unwrap();
        assert_relative_eq!(
            elapsed_time(&seg).unwrap().value(),
            t_down(7.0, 0.0),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            covered_length(&seg).unwrap().value(),
            d_down(7.0, 0.0),
            max_relative = 1e-8
        );
    }

    #[test]
    fn removable_singularity_converges() {
        // ∫_0^V (s - V) / (0.17 - a s²) ds = -ln 2 / a
        let f = flat();
        let vh = f.v_high();
        let seg = SpeedSegment::new(&f, Engine::On, 0.0, vh).unwrap();
        let q = seg.integral(|s| s - vh, Tolerance::DEFAULT).unwrap();
        assert_relative_eq!(q.value(), -(2f64.ln()) / A, max_relative = 1e-8);
    }

    #[test]
    fn downhill_coast_to_root_diverges() {
        let slope = (-0.05f64 / 9.81).asin();
        let f = FrozenDynamics::new(Vehicle::virvolt(10.0), slope, 0.0).unwrap();
        let seg = SpeedSegment::new(&f, Engine::Off, 8.0, f.v_low()).unwrap();
        assert_eq!(elapsed_time(&seg).unwrap(), Quantity::Infinite);
    }

    #[test]
    fn invalid_segments() {
        let f = flat();
        assert!(matches!(
            SpeedSegment::new(&f, Engine::On, 8.0, 7.0),
            Err(Error::InvalidSegment(_))
        ));
        assert!(matches!(
            SpeedSegment::new(&f, Engine::Off, 7.0, 8.0),
            Err(Error::InvalidSegment(_))
        ));
        assert!(matches!(
            SpeedSegment::new(&f, Engine::On, 7.0, 20.0),
            Err(Error::InvalidSegment(_))
        ));
    }

    #[test]
    fn period_of_the_reference_band() {
        let f = flat();
        let p = period_stats(&f, 6.1, 7.94, 0.0).unwrap();
        let period = t_up(6.1, 7.94) + t_down(7.94, 6.1);
        let distance = d_up(6.1, 7.94) + d_down(7.94, 6.1);
        assert_relative_eq!(p.period, period, max_relative = 1e-8);
        assert_relative_eq!(p.distance, distance, max_relative = 1e-8);
        assert_relative_eq!(p.period, 44.1067, max_relative = 1e-5);
        assert_relative_eq!(p.distance, 308.620, max_relative = 1e-5);
        assert_relative_eq!(p.average_speed(), 6.9971, max_relative = 1e-4);
        assert_relative_eq!(p.energy, 161.0 * t_up(6.1, 7.94) + 10.0, max_relative = 1e-8);
        assert_relative_eq!(p.energy, 2124.2, max_relative = 1e-4);
    }

    #[test]
    fn narrow_band_average_tends_to_upper_speed() {
        let f = flat();
        let p = period_stats(&f, 7.0 - 1e-4, 7.0, 0.0).unwrap();
        assert_relative_eq!(p.average_speed(), 7.0, epsilon = 1e-4);
    }

    #[test]
    fn wheel_power_energy() {
        let f = FrozenDynamics::flat(Vehicle::virvolt(10.0).with_power(PowerModel::WheelPower)).unwrap();
        let seg = SpeedSegment::new(&f, Engine::On, 6.1, 7.94).unwrap();
        // h = m f1 s, so energy = m f1 * distance
        assert_relative_eq!(
            energy_used(&seg).unwrap().value(),
            93.0 * 0.2 * d_up(6.1, 7.94),
            max_relative = 1e-8
        );
    }

    #[test]
    fn dwell_only_at_v_high() {
        let f = flat();
        assert!(period_stats(&f, 6.0, 8.0, 1.0).is_err());
        assert!(period_stats(&f, 0.0, 8.0, 0.0).is_err());
    }
}
