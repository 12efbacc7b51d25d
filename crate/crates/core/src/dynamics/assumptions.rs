//! Numerical checks of the structural hypotheses the band optimizer relies
//! on, evaluated on one frozen slice.

use serde::Serialize;

use super::frozen::FrozenDynamics;
use super::vehicle::Engine;
use crate::quadrature::{SpeedSegment, Tolerance};

/// Points of the scan grids used by the sign and monotonicity checks.
const SCAN_POINTS: usize = 2001;
/// Interior points of the convexity grid.
pub const CONVEXITY_GRID: usize = 200;
/// Second differences smaller than this (relative to `max |F|`) are zero.
const CURVATURE_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The check itself could not be carried out.
    Indeterminate,
}

/// Outcome of one item plus the number that decided it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemCheck {
    pub verdict: Verdict,
    pub witness: f64,
    pub note: String,
}

impl ItemCheck {
    fn new(ok: bool, witness: f64, note: impl Into<String>) -> Self {
        ItemCheck {
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            witness,
            note: note.into(),
        }
    }

    fn indeterminate(note: impl Into<String>) -> Self {
        ItemCheck {
            verdict: Verdict::Indeterminate,
            witness: f64::NAN,
            note: note.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    StrictlyConvex,
    StrictlyConcave,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `x -> f(x, u)` continuous on the operating range.
    pub continuity: ItemCheck,
    /// Forward uniqueness of the Cauchy problem.
    pub forward_uniqueness: ItemCheck,
    /// Engine-on equilibrium exists, with `f(., 1)` positive below it and negative above.
    pub engine_equilibrium: ItemCheck,
    /// `f(x, 0) < f(x, 1)`.
    pub engine_effective: ItemCheck,
    /// Engine-off limit speed exists.
    pub coasting_limit: ItemCheck,
    /// `h(x, 1) > h(x, 0) = 0`.
    pub consumption_sign: ItemCheck,
    /// `h(., 1)` nondecreasing.
    pub consumption_monotone: ItemCheck,
    /// Switching cost below the full-speed threshold.
    pub switch_cost: ItemCheck,
    pub switch_cost_lhs: f64,
    pub switch_cost_rhs: f64,
    /// `F = h(., 1) f(., 0) / (f(., 1) - f(., 0))` strictly convex or concave.
    pub convexity: ItemCheck,
    pub curvature: Curvature,
    pub convexity_grid: usize,
}

impl AssumptionReport {
    pub fn items(&self) -> [(&'static str, &ItemCheck); 9] {
        [
            ("continuity", &self.continuity),
            ("forward_uniqueness", &self.forward_uniqueness),
            ("engine_equilibrium", &self.engine_equilibrium),
            ("engine_effective", &self.engine_effective),
            ("coasting_limit", &self.coasting_limit),
            ("consumption_sign", &self.consumption_sign),
            ("consumption_monotone", &self.consumption_monotone),
            ("switch_cost", &self.switch_cost),
            ("convexity", &self.convexity),
        ]
    }

    pub fn passed(&self) -> bool {
        self.items().iter().all(|(_, c)| c.passed())
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// Grid over `(lo, hi]`.
fn half_open_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

pub fn check_assumptions(frozen: &FrozenDynamics) -> AssumptionReport {
    let (vl, vh) = (frozen.v_low(), frozen.v_high());
    let (lhs, rhs, switch_cost) = switch_cost_check(frozen);
    let (curvature, convexity) = convexity_check(frozen);
    AssumptionReport {
        continuity: continuity_check(frozen, vl, vh),
        forward_uniqueness: uniqueness_check(frozen, vl, vh),
        engine_equilibrium: engine_equilibrium_check(frozen, vh),
        engine_effective: engine_effective_check(frozen, vl, vh),
        coasting_limit: coasting_limit_check(frozen, vl, vh),
        consumption_sign: consumption_sign_check(frozen, vl, vh),
        consumption_monotone: consumption_monotone_check(frozen, vl, vh),
        switch_cost,
        switch_cost_lhs: lhs,
        switch_cost_rhs: rhs,
        convexity,
        curvature,
        convexity_grid: CONVEXITY_GRID,
    }
}

/// Largest jump between neighbours on two nested grids. A continuous function
/// sees the jump shrink with the step; a discontinuity keeps it.
fn continuity_check(frozen: &FrozenDynamics, vl: f64, vh: f64) -> ItemCheck {
    let max_jump = |n: usize, u: Engine| {
        let xs: Vec<f64> = half_open_grid(vl, vh, n).collect();
        xs.windows(2)
            .map(|w| (frozen.f_forward(w[1], u) - frozen.f_forward(w[0], u)).abs())
            .fold(0.0, f64::max)
    };
    let mut worst: f64 = 0.0;
    for u in [Engine::Off, Engine::On] {
        let coarse = max_jump(SCAN_POINTS, u);
        let fine = max_jump(4 * SCAN_POINTS, u);
        let ratio = if coarse == 0.0 { 0.0 } else { fine / coarse };
        worst = worst.max(ratio);
    }
    // first-order shrinkage gives 1/4; a jump gives 1
    ItemCheck::new(
        worst < 0.5,
        worst,
        "ratio of largest neighbour jumps after refining the grid 4x on (V_low, V_high]",
    )
}

/// Forward uniqueness holds where `f` is Lipschitz; the witness is the
/// largest difference quotient on the operating range. The rest point of a
/// sticking slice is handled by the Filippov convention.
fn uniqueness_check(frozen: &FrozenDynamics, vl: f64, vh: f64) -> ItemCheck {
    let xs: Vec<f64> = half_open_grid(vl, vh, SCAN_POINTS).collect();
    let mut lip: f64 = 0.0;
    for u in [Engine::Off, Engine::On] {
        for w in xs.windows(2) {
            let q = (frozen.f_forward(w[1], u) - frozen.f_forward(w[0], u)).abs() / (w[1] - w[0]);
            lip = lip.max(q);
        }
    }
    let note = if frozen.is_sticking() {
        "largest difference quotient; rest at 0 is a sticking point"
    } else {
        "largest difference quotient on (V_low, V_high]"
    };
    ItemCheck::new(lip.is_finite(), lip, note)
}

fn engine_equilibrium_check(frozen: &FrozenDynamics, vh: f64) -> ItemCheck {
    let at_root = frozen.f_forward(vh, Engine::On).abs();
    let below_ok = grid(0.0, vh, SCAN_POINTS)
        .take(SCAN_POINTS - 1)
        .all(|x| frozen.f_forward(x, Engine::On) > 0.0);
    let above_ok =
        half_open_grid(vh, 2.0 * vh + 1.0, SCAN_POINTS).all(|x| frozen.f_forward(x, Engine::On) < 0.0);
    ItemCheck::new(
        below_ok && above_ok && at_root < 1e-9,
        vh,
        "V_high; f(., 1) scanned on [0, V_high) and (V_high, 2 V_high + 1]",
    )
}

fn engine_effective_check(frozen: &FrozenDynamics, vl: f64, vh: f64) -> ItemCheck {
    let gap = grid(vl, vh, SCAN_POINTS)
        .map(|x| frozen.f_forward(x, Engine::On) - frozen.f_forward(x, Engine::Off))
        .fold(f64::INFINITY, f64::min);
    ItemCheck::new(gap > 0.0, gap, "min of f(x, 1) - f(x, 0) on [V_low, V_high]")
}

fn coasting_limit_check(frozen: &FrozenDynamics, vl: f64, vh: f64) -> ItemCheck {
    let above_ok =
        half_open_grid(vl, 2.0 * vh + 1.0, SCAN_POINTS).all(|x| frozen.f_forward(x, Engine::Off) < 0.0);
    if frozen.is_sticking() {
        return ItemCheck::new(
            above_ok,
            vl,
            "V_low = 0 is the sticking rest point; f(., 0) < 0 above it",
        );
    }
    let below_ok = grid(0.0, vl, SCAN_POINTS)
        .take(SCAN_POINTS - 1)
        .all(|x| frozen.f_forward(x, Engine::Off) > 0.0);
    let at_root = frozen.f_forward(vl, Engine::Off).abs();
    ItemCheck::new(
        above_ok && below_ok && at_root < 1e-9,
        vl,
        "V_low; f(., 0) scanned on [0, V_low) and (V_low, 2 V_high + 1]",
    )
}

fn consumption_sign_check(frozen: &FrozenDynamics, vl: f64, vh: f64) -> ItemCheck {
    let mut min_on = f64::INFINITY;
    let mut off_zero = true;
    for x in half_open_grid(vl, vh, SCAN_POINTS) {
        min_on = min_on.min(frozen.h(x, Engine::On));
        off_zero &= frozen.h(x, Engine::Off) == 0.0;
    }
    ItemCheck::new(
        off_zero && min_on > 0.0,
        min_on,
        "min of h(x, 1) on (V_low, V_high]; h(x, 0) checked identically zero",
    )
}

fn consumption_monotone_check(frozen: &FrozenDynamics, vl: f64, vh: f64) -> ItemCheck {
    let hs: Vec<f64> = half_open_grid(vl, vh, SCAN_POINTS)
        .map(|x| frozen.h(x, Engine::On))
        .collect();
    let worst_drop = hs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::min);
    ItemCheck::new(
        worst_drop >= 0.0,
        worst_drop,
        "most negative increment of h(., 1) on (V_low, V_high]",
    )
}

/// Both sides of the switching-cost inequality, from the speed integrals.
fn switch_cost_check(frozen: &FrozenDynamics) -> (f64, f64, ItemCheck) {
    let (vl, vh) = (frozen.v_low(), frozen.v_high());
    let h_top = frozen.h(vh, Engine::On);
    let tol = Tolerance::DEFAULT;
    let sides = (|| {
        let up = SpeedSegment::new(frozen, Engine::On, vl, vh)?;
        let down = SpeedSegment::new(frozen, Engine::Off, vh, vl)?;
        let consumption = up.integral(|s| h_top - frozen.h(s, Engine::On), tol)?;
        let coast = down.integral(|s| s - vl, tol)?;
        let climb = up.integral(|s| s - vh, tol)?;
        Ok::<_, crate::Error>((consumption, coast, climb))
    })();
    match sides {
        Err(e) => (
            f64::NAN,
            f64::NAN,
            ItemCheck::indeterminate(format!("integral evaluation failed: {e}")),
        ),
        Ok((consumption, coast, climb)) => match (consumption.finite(), coast.finite(), climb.finite()) {
            (Some(i0), Some(i1), Some(i2)) => {
                let lhs = i0 + frozen.alpha();
                let rhs = h_top / (vh - vl) * (i1 + i2);
                (lhs, rhs, ItemCheck::new(lhs < rhs, rhs - lhs, "rhs - lhs (J)"))
            }
            _ => (
                f64::NAN,
                f64::NAN,
                ItemCheck::new(false, f64::INFINITY, "an integral of the inequality diverges"),
            ),
        },
    }
}

/// Sign test of second differences of `F` on a uniform interior grid.
fn convexity_check(frozen: &FrozenDynamics) -> (Curvature, ItemCheck) {
    let (vl, vh) = (frozen.v_low(), frozen.v_high());
    let n = CONVEXITY_GRID;
    let big_f = |x: f64| {
        let f0 = frozen.f_forward(x, Engine::Off);
        let f1 = frozen.f_forward(x, Engine::On);
        frozen.h(x, Engine::On) * f0 / (f1 - f0)
    };
    let values: Vec<f64> = (1..=n)
        .map(|i| big_f(vl + (vh - vl) * i as f64 / (n + 1) as f64))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return (
            Curvature::Neither,
            ItemCheck::indeterminate("F is not finite on the grid"),
        );
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = CURVATURE_THRESHOLD * scale.max(f64::MIN_POSITIVE);
    let second: Vec<f64> = values.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let curvature = if second.iter().all(|d| *d > threshold) {
        Curvature::StrictlyConvex
    } else if second.iter().all(|d| *d < -threshold) {
        Curvature::StrictlyConcave
    } else {
        Curvature::Neither
    };
    let weakest = second.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    let check = ItemCheck::new(
        curvature != Curvature::Neither,
        weakest,
        format!("smallest |second difference| of F over {n} interior points (threshold {threshold:e})"),
    );
    (curvature, check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{PowerFn, PowerModel, Vehicle};
    use approx::assert_relative_eq;

    fn flat(alpha: f64) -> FrozenDynamics {
        FrozenDynamics::flat(Vehicle::virvolt(alpha)).unwrap()
    }

    #[test]
    fn flat_virvolt_passes_everything() {
        let report = check_assumptions(&flat(10.0));
        for (name, item) in report.items() {
            assert!(item.passed(), "{name}: {item:?}");
        }
        assert!(report.passed());
        assert_eq!(report.curvature, Curvature::StrictlyConcave);
        assert_eq!(report.convexity_grid, 200);
    }

    #[test]
    fn switch_cost_sides_match_closed_forms() {
        let (a, c) = (6e-4, 0.03);
        let f = flat(10.0);
        let vh = f.v_high();
        let report = check_assumptions(&f);
        // ∫_0^Vh s/(a s² + c) and ∫_0^Vh (s - Vh)/(0.17 - a s²)
        let coast = ((a * vh * vh + c) / c).ln() / (2.0 * a);
        let climb = -(2f64.ln()) / a;
        assert_relative_eq!(report.switch_cost_lhs, 10.0, epsilon = 1e-9);
        assert_relative_eq!(
            report.switch_cost_rhs,
            161.0 / vh * (coast + climb),
            max_relative = 1e-8
        );
    }

    #[test]
    fn huge_switch_cost_fails() {
        let report = check_assumptions(&flat(1e5));
        assert_eq!(report.switch_cost.verdict, Verdict::Fail);
        assert!(!report.passed());
    }

    #[test]
    fn affine_f_is_neither() {
        // h chosen so that F(x) = -(1 + x)
        let power = PowerModel::Custom(PowerFn::new(|x| 0.2 * (1.0 + x) / (6e-4 * x * x + 0.03)));
        let f = FrozenDynamics::flat(Vehicle::virvolt(10.0).with_power(power)).unwrap();
        let report = check_assumptions(&f);
        assert_eq!(report.curvature, Curvature::Neither);
        assert_eq!(report.convexity.verdict, Verdict::Fail);
    }

    #[test]
    fn wheel_power_is_monotone() {
        let f = FrozenDynamics::flat(Vehicle::virvolt(10.0).with_power(PowerModel::WheelPower)).unwrap();
        let report = check_assumptions(&f);
        assert!(report.consumption_sign.passed());
        assert!(report.consumption_monotone.passed());
    }

    #[test]
    fn downhill_slice_has_proper_coasting_root() {
        let slope = (-0.05f64 / 9.81).asin();
        let f = FrozenDynamics::new(Vehicle::virvolt(10.0), slope, 0.0).unwrap();
        let report = check_assumptions(&f);
        assert!(report.coasting_limit.passed(), "{:?}", report.coasting_limit);
        assert_relative_eq!(report.coasting_limit.witness, 5.773502691896, epsilon = 1e-9);
    }
}
