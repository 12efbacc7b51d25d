//! Two-switch oscillation bands minimising average power at a prescribed
//! average speed on a frozen slice.
//!
//! For a lower speed `Va`, the upper speed `Vb` is found by bisection so that
//! the period average speed equals the target; the band with the lowest
//! average cost over a candidate grid of `Va` wins.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Engine, FrozenDynamics};
use crate::error::{Error, Result};
use crate::quadrature::{cycle_stats, elapsed_time, PeriodStats, SpeedSegment};

/// Default width of a band clamped under the safety speed (m/s).
pub const DEFAULT_DELTA: f64 = 0.5;
/// The upper speed search stops this far (relative) below `V_high`.
const VB_BRACKET_REL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 60;
/// Costs within this relative gap count as a tie.
const TIE_REL: f64 = 1e-12;

/// How the lower-speed candidates are laid out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidates {
    /// Offsets (m/s) subtracted from the target speed.
    BelowTarget(Vec<f64>),
    /// Fixed speeds (m/s).
    Absolute(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Spacing of the fine grid (m/s).
    pub step: f64,
    /// Half-width of the fine grid around the best coarse candidate (m/s).
    pub halfwidth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub candidates: Candidates,
    /// Accepted error on the period average speed (m/s).
    pub tolerance: f64,
    pub refinement: Option<Refinement>,
}

impl GridSpec {
    /// Four candidates `V - 2, V - 1.5, V - 1, V - 0.5`.
    pub fn coarse() -> Self {
        GridSpec {
            candidates: Candidates::BelowTarget((1..=4).map(|i| (5 - i) as f64 / 2.0).collect()),
            tolerance: 1e-4,
            refinement: None,
        }
    }

    /// The coarse grid followed by a 0.01 m/s grid over ±0.5 m/s.
    pub fn fine() -> Self {
        GridSpec {
            refinement: Some(Refinement {
                step: 0.01,
                halfwidth: 0.5,
            }),
            ..Self::coarse()
        }
    }

    pub fn absolute(speeds: Vec<f64>) -> Result<Self> {
        let grid = GridSpec {
            candidates: Candidates::Absolute(speeds),
            ..Self::coarse()
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let (values, increasing) = match &self.candidates {
            Candidates::BelowTarget(o) => (o, false),
            Candidates::Absolute(s) => (s, true),
        };
        if values.is_empty() {
            return Err(Error::InvalidParameter("candidate grid is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "candidate grid has non-finite entries".into(),
            ));
        }
        let ordered = values
            .windows(2)
            .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
        if !ordered {
            return Err(Error::InvalidParameter(
                "candidate speeds must be strictly increasing".into(),
            ));
        }
        if let Candidates::BelowTarget(o) = &self.candidates {
            if o.iter().any(|x| *x <= 0.0) {
                return Err(Error::InvalidParameter(
                    "candidate offsets must be positive".into(),
                ));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("grid tolerance must be positive".into()));
        }
        if let Some(r) = self.refinement {
            if !(r.step > 0.0 && r.halfwidth >= 0.0) {
                return Err(Error::InvalidParameter(
                    "refinement needs a positive step and a non-negative half-width".into(),
                ));
            }
        }
        Ok(())
    }

    /// Lower-speed candidates inside `(v_low, v)`. When none of the
    /// configured ones qualify, four evenly spaced speeds are used instead.
    pub fn candidates_for(&self, v: f64, v_low: f64) -> Vec<f64> {
        let raw: Vec<f64> = match &self.candidates {
            Candidates::BelowTarget(o) => o.iter().map(|d| v - d).collect(),
            Candidates::Absolute(s) => s.clone(),
        };
        let valid: Vec<f64> = raw.into_iter().filter(|x| *x > v_low && *x < v).collect();
        if valid.is_empty() {
            (1..=4).map(|i| v_low + (v - v_low) * i as f64 / 5.0).collect()
        } else {
            valid
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::coarse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    /// Plain two-switch oscillation.
    Oscillating,
    /// Holds `V_high` for `dwell` seconds every period.
    Dwelling,
    /// Rests at `V_low` for `rest_dwell` seconds every period.
    Resting,
    /// Target at or below `V_low`: the engine stays off.
    Coast,
    /// Upper speed capped by the safety speed.
    Clamped,
    /// Target at or above `V_high`: best effort just below `V_high`.
    Unreachable,
}

/// A periodic two-switch strategy and its per-period totals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationBand {
    pub va: f64,
    pub vb: f64,
    /// Time held at `vb` per period (s).
    pub dwell: f64,
    /// Time at rest at `va` per period (s).
    pub rest_dwell: f64,
    pub period: f64,
    pub distance: f64,
    pub energy: f64,
    /// `energy / period` (W).
    pub avg_cost: f64,
    pub kind: BandKind,
}

impl OscillationBand {
    fn from_stats(va: f64, vb: f64, stats: &PeriodStats, kind: BandKind) -> Self {
        OscillationBand {
            va,
            vb,
            dwell: stats.dwell,
            rest_dwell: stats.rest_dwell,
            period: stats.period,
            distance: stats.distance,
            energy: stats.energy,
            avg_cost: stats.average_cost(),
            kind,
        }
    }

    /// Band whose totals could not be evaluated (NaN).
    fn bare(va: f64, vb: f64, kind: BandKind) -> Self {
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

    /// Engine never on.
    pub fn coast(frozen: &FrozenDynamics) -> Self {
        OscillationBand {
            avg_cost: 0.0,
            energy: 0.0,
            ..Self::bare(frozen.v_low(), frozen.v_low(), BandKind::Coast)
        }
    }

    /// `(vsafe - delta, vsafe)`, with totals when they can be computed.
    pub fn clamped(frozen: &FrozenDynamics, vsafe: f64, delta: f64) -> Self {
        let vb = vsafe.min(frozen.v_high());
        let va = (vb - delta).max(frozen.v_low());
        match cycle_stats(frozen, va, vb, 0.0, 0.0) {
            Ok(stats) => Self::from_stats(va, vb, &stats, BandKind::Clamped),
            Err(_) => Self::bare(va, vb, BandKind::Clamped),
        }
    }

    /// `(V_high - delta, V_high)` for targets the slice cannot sustain.
    pub fn unreachable(frozen: &FrozenDynamics, delta: f64) -> Self {
        let vb = frozen.v_high();
        let va = (vb - delta).max(frozen.v_low());
        Self::bare(va, vb, BandKind::Unreachable)
    }

    pub fn average_speed(&self) -> f64 {
        self.distance / self.period
    }
}

/// Period average speed of the band `(va, vb)`.
fn average_speed(frozen: &FrozenDynamics, va: f64, vb: f64) -> Result<f64> {
    Ok(cycle_stats(frozen, va, vb, 0.0, 0.0)?.average_speed())
}

/// Bisection on an increasing function: the point of `[lo, hi]` where
/// `g` crosses `target`, to within `tol` on `g`.
fn solve_increasing(
    mut g: impl FnMut(f64) -> Result<f64>,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let mut best = (f64::INFINITY, hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let value = g(mid)?;
        let miss = (value - target).abs();
        if miss < best.0 {
            best = (miss, mid);
        }
        if miss <= tol {
            break;
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

fn check_candidate(frozen: &FrozenDynamics, va: f64, v: f64) -> Result<()> {
    let (vl, vh) = (frozen.v_low(), frozen.v_high());
    if !(v < vh) {
        return Err(Error::InfeasibleTarget(format!(
            "target {v} m/s is not below V_high = {vh} m/s"
        )));
    }
    if !(va > vl && va < v) {
        return Err(Error::InfeasibleCandidate(format!(
            "lower speed {va} m/s must lie in (V_low, target) = ({vl}, {v}) m/s"
        )));
    }
    Ok(())
}

/// Upper speed `vb` (and dwell at `V_high`, usually zero) such that the band
/// starting at `va` averages `v`.
pub fn upper_limit(frozen: &FrozenDynamics, va: f64, v: f64) -> Result<(f64, f64)> {
    check_candidate(frozen, va, v)?;
    upper_limit_from(frozen, va, v, GridSpec::coarse().tolerance)
}

/// As [`upper_limit`] but also accepting `va = V_low`.
fn upper_limit_from(frozen: &FrozenDynamics, va: f64, v: f64, tol: f64) -> Result<(f64, f64)> {
    let vh = frozen.v_high();
    let vb_max = vh * (1.0 - VB_BRACKET_REL);
    let top = average_speed(frozen, va, vb_max)?;
    if top < v {
        return saturated_dwell(frozen, va, v, tol);
    }
    // solve far more tightly than required so neighbouring candidates compare cleanly
    let vb = solve_increasing(
        |vb| average_speed(frozen, va, vb),
        v,
        v,
        vb_max,
        (1e-6 * tol).max(1e-12 * v),
    )?;
    let reached = average_speed(frozen, va, vb)?;
    if (reached - v).abs() > tol {
        return Err(Error::InfeasibleCandidate(format!(
            "no upper speed gives average {v} m/s from {va} m/s (closest {reached})"
        )));
    }
    Ok((vb, 0.0))
}

/// `V_high` reached in finite time: hold it long enough to lift the average.
fn saturated_dwell(frozen: &FrozenDynamics, va: f64, v: f64, tol: f64) -> Result<(f64, f64)> {
    let vh = frozen.v_high();
    let up = SpeedSegment::new(frozen, Engine::On, va, vh)?;
    if elapsed_time(&up)?.is_infinite() {
        return Err(Error::InfeasibleCandidate(format!(
            "lower speed {va} m/s is too low to average {v} m/s: V_high = {vh} m/s is only approached asymptotically"
        )));
    }
    let stats = cycle_stats(frozen, va, vh, 0.0, 0.0)?;
    let dwell = (v * stats.period - stats.distance) / (vh - v);
    let check = cycle_stats(frozen, va, vh, dwell, 0.0)?.average_speed();
    if !(dwell >= 0.0 && (check - v).abs() <= tol) {
        return Err(Error::InfeasibleCandidate(format!(
            "dwell at V_high cannot reach average {v} m/s from {va} m/s"
        )));
    }
    Ok((vh, dwell))
}

fn band_from(frozen: &FrozenDynamics, va: f64, v: f64, tol: f64) -> Result<OscillationBand> {
    let (vb, dwell) = upper_limit_from(frozen, va, v, tol)?;
    let stats = cycle_stats(frozen, va, vb, dwell, 0.0)?;
    let kind = if dwell > 0.0 {
        BandKind::Dwelling
    } else {
        BandKind::Oscillating
    };
    Ok(OscillationBand::from_stats(va, vb, &stats, kind))
}

/// Full band record for the lower speed `va` at target `v`.
pub fn band_cost(frozen: &FrozenDynamics, va: f64, v: f64) -> Result<OscillationBand> {
    check_candidate(frozen, va, v)?;
    band_from(frozen, va, v, GridSpec::coarse().tolerance)
}

/// Cheapest band over `candidates`; infeasible candidates are skipped.
/// Ties go to the larger lower speed.
fn cheapest(
    frozen: &FrozenDynamics,
    v: f64,
    tol: f64,
    candidates: impl IntoIterator<Item = f64>,
) -> Option<OscillationBand> {
    let mut best: Option<OscillationBand> = None;
    for va in candidates {
        let Ok(band) = band_from(frozen, va, v, tol) else {
            continue;
        };
        if !band.avg_cost.is_finite() {
            continue;
        }
        best = match best {
            None => Some(band),
            Some(b) => {
                let gap = band.avg_cost - b.avg_cost;
                let tie = gap.abs() <= TIE_REL * b.avg_cost.abs().max(f64::MIN_POSITIVE);
                if (tie && band.va > b.va) || (!tie && gap < 0.0) {
                    Some(band)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// The cheapest band at average speed `v`, clamped under `vsafe`.
pub fn optimal_band(
    frozen: &FrozenDynamics,
    v: f64,
    vsafe: f64,
    grid: &GridSpec,
    delta: f64,
) -> Result<OscillationBand> {
    grid.validate()?;
    if !(v.is_finite() && vsafe > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target {v}, safety speed {vsafe} and margin {delta} must be finite and positive"
        )));
    }
    let (vl, vh) = (frozen.v_low(), frozen.v_high());
    if v >= vh {
        return Err(Error::InfeasibleTarget(format!(
            "target {v} m/s is not below V_high = {vh} m/s"
        )));
    }
    if v <= vl {
        return Ok(OscillationBand::coast(frozen));
    }
    if v >= vsafe {
        return Ok(OscillationBand::clamped(frozen, vsafe, delta));
    }

    let coarse = grid.candidates_for(v, vl);
    let mut best = cheapest(frozen, v, grid.tolerance, coarse.iter().copied()).ok_or_else(|| {
        Error::InfeasibleCandidate(format!("no candidate lower speed reaches average {v} m/s"))
    })?;
    if let Some(r) = grid.refinement {
        let n = (r.halfwidth / r.step).round() as i64;
        let center = best.va;
        let fine = (-n..=n)
            .map(|k| center + k as f64 * r.step)
            .filter(|x| *x > vl && *x < v);
        if let Some(refined) = cheapest(frozen, v, grid.tolerance, fine.chain([center])) {
            best = refined;
        }
    }
    if best.vb > vsafe {
        return Ok(OscillationBand::clamped(frozen, vsafe, delta));
    }
    Ok(best)
}

/// Large-period expansion of the minimal two-switch average cost:
/// `value = leading + bracket / T2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCost {
    /// Limit as the period grows without bound (W).
    pub leading: f64,
    /// Coefficient of `1 / T2` (J).
    pub bracket: f64,
    pub value: f64,
}

pub fn asymptotic_average_cost(frozen: &FrozenDynamics, v: f64, t2: f64) -> Result<AsymptoticCost> {
    let (vl, vh) = (frozen.v_low(), frozen.v_high());
    if !(v >= vl && v < vh) {
        return Err(Error::InvalidParameter(format!(
            "target {v} m/s must lie in [V_low, V_high) = [{vl}, {vh}) m/s"
        )));
    }
    if !(t2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "period must be positive, got {t2}"
        )));
    }
    let h_top = frozen.h(vh, Engine::On);
    let tol = crate::quadrature::Tolerance::DEFAULT;
    let up = SpeedSegment::new(frozen, Engine::On, vl, vh)?;
    let down = SpeedSegment::new(frozen, Engine::Off, vh, vl)?;
    let consumption = up.integral(|s| frozen.h(s, Engine::On) - h_top, tol)?;
    let climb = up.integral(|s| s - vh, tol)?;
    let coast = down.integral(|s| s - vl, tol)?;
    let (Some(i0), Some(i1), Some(i2)) = (consumption.finite(), climb.finite(), coast.finite()) else {
        return Err(Error::Inapplicable(
            "an integral of the large-period expansion diverges".into(),
        ));
    };
    let leading = h_top * (v - vl) / (vh - vl);
    let bracket = frozen.alpha() + i0 - (i1 + i2) * h_top / (vh - vl);
    Ok(AsymptoticCost {
        leading,
        bracket,
        value: leading + bracket / t2,
    })
}

/// The two-switch band of period `t2` averaging `v`.
///
/// Periods longer than the widest oscillation (lower speed at `V_low`) are
/// reached by resting at `V_low`, which is only possible on a sticking slice.
pub fn fixed_period_band(frozen: &FrozenDynamics, v: f64, t2: f64) -> Result<OscillationBand> {
    let (vl, vh) = (frozen.v_low(), frozen.v_high());
    if !(v > vl && v < vh) {
        return Err(Error::InvalidParameter(format!(
            "target {v} m/s must lie in (V_low, V_high) = ({vl}, {vh}) m/s"
        )));
    }
    if !(t2 > 0.0 && t2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "period must be positive, got {t2}"
        )));
    }
    let tol = GridSpec::coarse().tolerance;
    let period_rel = 1e-10;
    // Widest oscillation. Without sticking the period grows without bound as va -> V_low.
    let va_min = if frozen.is_sticking() {
        vl
    } else {
        vl + 1e-9 * (vh - vl)
    };
    let widest = band_from(frozen, va_min, v, tol)?;
    if t2 <= widest.period {
        // period decreases as va rises towards v
        let va = solve_increasing(
            |va| Ok(-band_from(frozen, va, v, tol)?.period),
            -t2,
            va_min,
            v,
            period_rel * t2,
        )?;
        let band = band_from(frozen, va, v, tol)?;
        if ((band.period - t2) / t2).abs() > 1e-6 {
            return Err(Error::InfeasibleCandidate(format!(
                "no oscillation of period {t2} s averages {v} m/s (closest {} s)",
                band.period
            )));
        }
        return Ok(band);
    }
    if !frozen.is_sticking() {
        return Err(Error::InfeasibleCandidate(format!(
            "period {t2} s is beyond the widest oscillation ({} s)",
            widest.period
        )));
    }
    // rest at V_low for r seconds, where r keeps the average at v
    let resting = |vb: f64| -> Result<PeriodStats> {
        let s = cycle_stats(frozen, vl, vb, 0.0, 0.0)?;
        let r = ((s.distance - v * s.period) / (v - vl)).max(0.0);
        cycle_stats(frozen, vl, vb, 0.0, r)
    };
    let vb_lo = widest.vb;
    let vb_hi = vh * (1.0 - VB_BRACKET_REL);
    if resting(vb_hi)?.period < t2 {
        return Err(Error::InfeasibleCandidate(format!(
            "period {t2} s is beyond every resting oscillation"
        )));
    }
    let vb = solve_increasing(|vb| Ok(resting(vb)?.period), t2, vb_lo, vb_hi, period_rel * t2)?;
    let stats = resting(vb)?;
    Ok(OscillationBand::from_stats(vl, vb, &stats, BandKind::Resting))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Vehicle;
    use approx::assert_relative_eq;

    const A: f64 = 6e-4;
    const C: f64 = 0.03;

    fn flat() -> FrozenDynamics {
        FrozenDynamics::flat(Vehicle::virvolt(10.0)).unwrap()
    }

    // closed-form period oracle on the flat slice
    fn oracle_avg(va: f64, vb: f64) -> f64 {
        let vh = (0.17f64 / A).sqrt();
        let k = (C / A).sqrt();
        let t = ((vb / vh).atanh() - (va / vh).atanh()) / (A * vh)
            + ((vb / k).atan() - (va / k).atan()) / (A * C).sqrt();
        let d = -((vh * vh - vb * vb) / (vh * vh - va * va)).ln() / (2.0 * A)
            + ((A * vb * vb + C) / (A * va * va + C)).ln() / (2.0 * A);
        d / t
    }

    fn oracle_vb(va: f64, v: f64) -> f64 {
        let (mut lo, mut hi) = (v, 16.8);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if oracle_avg(va, mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn reference_upper_limit() {
        let (vb, dwell) = upper_limit(&flat(), 6.1, 7.0).unwrap();
        assert_eq!(dwell, 0.0);
        assert!((vb - 7.94).abs() < 0.05, "vb = {vb}");
        assert_relative_eq!(vb, oracle_vb(6.1, 7.0), epsilon = 1e-5);
    }

    #[test]
    fn wider_gap_needs_higher_upper_speed() {
        let f = flat();
        let (vb5, _) = upper_limit(&f, 5.0, 7.0).unwrap();
        let (vb61, _) = upper_limit(&f, 6.1, 7.0).unwrap();
        assert!(vb5 > vb61);
        assert_relative_eq!(vb5, oracle_vb(5.0, 7.0), epsilon = 1e-5);
    }

    #[test]
    fn band_collapses_onto_target() {
        let (vb, _) = upper_limit(&flat(), 7.0 - 1e-3, 7.0).unwrap();
        assert!(vb > 7.0 && vb < 7.0 + 2e-3);
    }

    #[test]
    fn reference_band_cost() {
        let band = band_cost(&flat(), 6.1, 7.0).unwrap();
        assert!((band.avg_cost - 48.0).abs() < 1.0, "{}", band.avg_cost);
        assert_relative_eq!(band.average_speed(), 7.0, epsilon = 1e-4);
        assert_eq!(band.kind, BandKind::Oscillating);
        let other = band_cost(&flat(), 6.5, 7.0).unwrap();
        assert!(other.avg_cost != band.avg_cost);
    }

    #[test]
    fn free_switching_cost_is_duty_rate() {
        let f = FrozenDynamics::flat(Vehicle::virvolt(1e-300)).unwrap();
        let band = band_cost(&f, 6.1, 7.0).unwrap();
        let up = SpeedSegment::new(&f, Engine::On, band.va, band.vb).unwrap();
        let t_up = elapsed_time(&up).unwrap().value();
        assert_relative_eq!(band.avg_cost, 161.0 * t_up / band.period, max_relative = 1e-9);
    }

    #[test]
    fn fine_grid_reproduces_reference_band() {
        let band = optimal_band(&flat(), 7.0, 20.0, &GridSpec::fine(), DEFAULT_DELTA).unwrap();
        assert!((band.va - 6.1).abs() <= 0.1, "{band:?}");
        assert!((band.vb - 7.94).abs() <= 0.1, "{band:?}");
    }

    #[test]
    fn coarse_grid_picks_a_coarse_candidate_and_refining_helps() {
        let f = flat();
        let coarse = optimal_band(&f, 7.0, 20.0, &GridSpec::coarse(), DEFAULT_DELTA).unwrap();
        let costs: Vec<f64> = [5.0, 5.5, 6.0, 6.5]
            .iter()
            .map(|va| band_cost(&f, *va, 7.0).unwrap().avg_cost)
            .collect();
        let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(coarse.avg_cost, min);
        assert!([5.0, 5.5, 6.0, 6.5].contains(&coarse.va));
        let fine = optimal_band(&f, 7.0, 20.0, &GridSpec::fine(), DEFAULT_DELTA).unwrap();
        assert!(fine.avg_cost <= coarse.avg_cost);
    }

    #[test]
    fn safety_clamp() {
        let band = optimal_band(&flat(), 7.0, 7.5, &GridSpec::fine(), DEFAULT_DELTA).unwrap();
        assert_eq!(band.kind, BandKind::Clamped);
        assert_eq!((band.va, band.vb), (7.0, 7.5));
        let above = optimal_band(&flat(), 9.0, 8.0, &GridSpec::coarse(), DEFAULT_DELTA).unwrap();
        assert_eq!((above.va, above.vb), (7.5, 8.0));
    }

    #[test]
    fn degenerate_targets() {
        let f = flat();
        assert!(matches!(
            optimal_band(&f, 17.0, 20.0, &GridSpec::coarse(), 0.5),
            Err(Error::InfeasibleTarget(_))
        ));
        let slope = (-0.05f64 / 9.81).asin();
        let down = FrozenDynamics::new(Vehicle::virvolt(10.0), slope, 0.0).unwrap();
        let band = optimal_band(&down, 5.0, 20.0, &GridSpec::coarse(), 0.5).unwrap();
        assert_eq!(band.kind, BandKind::Coast);
        assert_eq!(band.avg_cost, 0.0);
    }

    #[test]
    fn low_target_uses_fallback_grid() {
        let band = optimal_band(&flat(), 0.4, 20.0, &GridSpec::coarse(), 0.5).unwrap();
        assert!(band.va > 0.0 && band.va < 0.4);
        assert_relative_eq!(band.average_speed(), 0.4, epsilon = 1e-4);
    }

    #[test]
    fn asymptotic_terms() {
        let f = flat();
        let vh = f.v_high();
        let e = asymptotic_average_cost(&f, 7.0, f64::INFINITY).unwrap();
        assert_relative_eq!(e.leading, 161.0 * 7.0 / vh, max_relative = 1e-12);
        assert_relative_eq!(e.value, e.leading, max_relative = 1e-12);
        // bracket from closed forms
        let coast = ((A * vh * vh + C) / C).ln() / (2.0 * A);
        let climb = -(2f64.ln()) / A;
        assert_relative_eq!(
            e.bracket,
            10.0 - (climb + coast) * 161.0 / vh,
            max_relative = 1e-8
        );
        let zero = asymptotic_average_cost(&f, 0.0, 100.0).unwrap();
        assert_eq!(zero.leading, 0.0);
    }

    #[test]
    fn fixed_period_matches_requested_period() {
        let f = flat();
        for t2 in [100.0, 300.0, 600.0] {
            let band = fixed_period_band(&f, 7.0, t2).unwrap();
            assert_relative_eq!(band.period, t2, max_relative = 1e-6);
            assert_relative_eq!(band.average_speed(), 7.0, epsilon = 1e-4);
        }
        assert_eq!(fixed_period_band(&f, 7.0, 600.0).unwrap().kind, BandKind::Resting);
    }

    #[test]
    fn short_periods_cost_at_least_switch_rate() {
        let f = flat();
        for va in [6.5, 6.9, 6.99] {
            let band = band_cost(&f, va, 7.0).unwrap();
            assert!(band.avg_cost > 10.0 / band.period);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::absolute(vec![]).is_err());
        assert!(GridSpec::absolute(vec![6.0, 5.0]).is_err());
        assert!(GridSpec::absolute(vec![5.0, 6.0]).is_ok());
    }
}
