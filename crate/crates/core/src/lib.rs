//! Hybrid on/off eco-driving for a two-mode (engine on/off) vehicle with a
//! switching cost.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: the switched longitudinal model, power models, frozen
//!   (autonomous) slices, structural checks and an event-aware integrator.
//! - [`quadrature`]: speed-reparametrised integrals for time, distance and
//!   energy between two speeds under a constant engine mode.
//! - [`optimizer`]: the two-switch oscillation band minimising average power
//!   at a prescribed average speed, plus its large-period expansion.
//! - [`controller`]: the receding-horizon hysteresis controller and full-race
//!   simulation.
//! - [`robustness`]: sensitivity of the mean speed of an acceleration phase
//!   to misidentified dynamics.
//! - [`harness`]: scenario files, bundled fixtures and report output used by
//!   the `ecodrive` binary.

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dynamics;
mod error;
pub mod harness;
pub mod optimizer;
pub mod quadrature;
pub mod robustness;

pub use controller::{
    min_switch_interval, replan, run_race, switch_logic, ControllerConfig, Plan, RaceResult, RaceState,
    RaceSummary,
};
pub use dynamics::{
    acceleration, check_assumptions, equilibrium_speeds, freeze, integrate, power, AssumptionReport, Course,
    DragForm, Engine, FrozenDynamics, PowerModel, TrackProfile, Vehicle, VehicleParams, WindField,
};
pub use error::{Error, Result};
pub use optimizer::{
    asymptotic_average_cost, band_cost, fixed_period_band, optimal_band, upper_limit, BandKind, GridSpec,
    OscillationBand,
};
pub use quadrature::{
    covered_length, elapsed_time, energy_used, period_stats, PeriodStats, Quantity, SpeedSegment,
};
pub use robustness::{mean_speed, perturbation_series, proportional_invariance_check, SpeedProfile};
