//! Sensitivity of the mean speed of a monotone speed excursion to errors in
//! the identified acceleration profile.
//!
//! For a nonvanishing profile `g` on `[va, vb]`, `F(g) = L(g) / T(g)` with
//! `L(g) = ∫ s / g` and `T(g) = ∫ 1 / g`. `F` is unchanged when `g` is
//! rescaled, and for a perturbation `dg` with `|dg / g| < 1`
//!
//! ```text
//! F(g + dg) - F(g) = 1/T(g + dg) · Σ_{n≥1} (-1)ⁿ ∫ (s - F(g))/g · (dg/g)ⁿ ds
//! ```

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{Engine, FrozenDynamics};
use crate::error::{Error, Result};
use crate::quadrature::adaptive::{integrate, Tolerance};

/// Points of the grid on which profiles are checked and ratios sampled.
const SAMPLE_POINTS: usize = 2001;
pub const DEFAULT_TERMS: usize = 8;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Clone, Debug, PartialEq)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![delta[0]; 2];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Pchip { x, y, d }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|x| *x <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h * h10 * self.d[i] + h01 * self.y[i + 1] + h * h11 * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[derive(Clone)]
enum Shape {
    Closed(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Table(Arc<Pchip>),
}

/// A continuous function on `[va, vb]`, either a closure or an interpolated table.
#[derive(Clone)]
pub struct SpeedProfile {
    va: f64,
    vb: f64,
    shape: Shape,
}

impl fmt::Debug for SpeedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.shape {
            Shape::Closed(_) => "closed",
            Shape::Table(_) => "table",
        };
        f.debug_struct("SpeedProfile")
            .field("va", &self.va)
            .field("vb", &self.vb)
            .field("kind", &kind)
            .finish()
    }
}

impl SpeedProfile {
    /// Wraps `g` on `[va, vb]`. No check is made on its values.
    pub fn from_fn(va: f64, vb: f64, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(va.is_finite() && vb.is_finite() && va < vb) {
            return Err(Error::InvalidProfile(format!(
                "domain [{va}, {vb}] is empty or not finite"
            )));
        }
        Ok(SpeedProfile {
            va,
            vb,
            shape: Shape::Closed(Arc::new(g)),
        })
    }

    /// Monotone cubic interpolation through `(s[i], values[i])` on `[s[0], s[n-1]]`.
    pub fn from_table(s: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if s.len() < 2 || s.len() != values.len() {
            return Err(Error::InvalidProfile(format!(
                "table needs at least two rows of matching length, got {} speeds and {} values",
                s.len(),
                values.len()
            )));
        }
        if s.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile("table has non-finite entries".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "table speeds must be strictly increasing".into(),
            ));
        }
        let (va, vb) = (s[0], s[s.len() - 1]);
        Ok(SpeedProfile {
            va,
            vb,
            shape: Shape::Table(Arc::new(Pchip::new(s, values))),
        })
    }

    /// `s -> f(s, u)` of a frozen slice on `[va, vb]`.
    pub fn acceleration(frozen: &FrozenDynamics, u: Engine, va: f64, vb: f64) -> Result<Self> {
        let frozen = frozen.clone();
        Self::from_fn(va, vb, move |s| frozen.f_forward(s, u))
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.va, self.vb)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Closed(g) => g(s),
            Shape::Table(p) => p.eval(s),
        }
    }

    /// `k · g`.
    pub fn scaled(&self, k: f64) -> SpeedProfile {
        let inner = self.clone();
        SpeedProfile {
            va: self.va,
            vb: self.vb,
            shape: Shape::Closed(Arc::new(move |s| k * inner.eval(s))),
        }
    }

    /// `g + other` on the common domain.
    pub fn plus(&self, other: &SpeedProfile) -> Result<SpeedProfile> {
        self.same_domain(other)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(SpeedProfile {
            va: self.va,
            vb: self.vb,
            shape: Shape::Closed(Arc::new(move |s| a.eval(s) + b.eval(s))),
        })
    }

    fn same_domain(&self, other: &SpeedProfile) -> Result<()> {
        let tol = 1e-12 * (self.vb - self.va);
        if (self.va - other.va).abs() > tol || (self.vb - other.vb).abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "domains differ: [{}, {}] vs [{}, {}]",
                self.va, self.vb, other.va, other.vb
            )));
        }
        Ok(())
    }

    fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        (0..SAMPLE_POINTS).map(move |i| self.va + (self.vb - self.va) * i as f64 / (SAMPLE_POINTS - 1) as f64)
    }

    /// Checks that the profile is finite, nonzero and of one sign on the grid.
    pub fn check(&self) -> Result<()> {
        let mut sign = 0.0;
        for s in self.samples() {
            let g = self.eval(s);
            if !g.is_finite() || g == 0.0 {
                return Err(Error::InvalidProfile(format!("profile is {g} at {s} m/s")));
            }
            if sign == 0.0 {
                sign = g.signum();
            } else if g.signum() != sign {
                return Err(Error::InvalidProfile(format!(
                    "profile changes sign near {s} m/s"
                )));
            }
        }
        Ok(())
    }

    fn moment(&self, weight: impl Fn(f64) -> f64) -> Result<f64> {
        Ok(integrate(|s| weight(s) / self.eval(s), self.va, self.vb, Tolerance::TIGHT)?.value)
    }
}

/// `L(g) / T(g)`.
pub fn mean_speed(g: &SpeedProfile) -> Result<f64> {
    g.check()?;
    Ok(g.moment(|s| s)? / g.moment(|_| 1.0)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesResult {
    /// Individual terms, already divided by `T(g + dg)`.
    pub terms: Vec<f64>,
    /// Their sum.
    pub delta: f64,
    /// Sampled `sup |dg / g|`.
    pub sup_ratio: f64,
    /// Sampled variance of `dg / g` on a uniform speed grid.
    pub ratio_variance: f64,
}

impl SeriesResult {
    /// Sum of the first `n` terms.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.terms.iter().take(n).sum()
    }
}

/// Partial sum of the perturbation series of `F(g + dg) - F(g)`.
pub fn perturbation_series(g: &SpeedProfile, dg: &SpeedProfile, n_terms: usize) -> Result<SeriesResult> {
    g.check()?;
    g.same_domain(dg)?;
    let ratios: Vec<f64> = g.samples().map(|s| dg.eval(s) / g.eval(s)).collect();
    if ratios.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidProfile("dg / g is not finite".into()));
    }
    let sup_ratio = ratios.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if sup_ratio >= 1.0 {
        return Err(Error::DivergenceRisk(sup_ratio));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let ratio_variance = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;

    let f0 = mean_speed(g)?;
    let t_perturbed = integrate(|s| 1.0 / (g.eval(s) + dg.eval(s)), g.va, g.vb, Tolerance::TIGHT)?.value;
    let mut terms = Vec::with_capacity(n_terms);
    for n in 1..=n_terms {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let integral = integrate(
            |s| {
                let gs = g.eval(s);
                (s - f0) / gs * (dg.eval(s) / gs).powi(n as i32)
            },
            g.va,
            g.vb,
            Tolerance::TIGHT,
        )?
        .value;
        terms.push(sign * integral / t_perturbed);
    }
    let delta = terms.iter().sum();
    Ok(SeriesResult {
        terms,
        delta,
        sup_ratio,
        ratio_variance,
    })
}

/// `|F((1 + eps) g) - F(g)|`, which vanishes up to quadrature error.
pub fn proportional_invariance_check(g: &SpeedProfile, eps: f64) -> Result<f64> {
    if !(eps.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "|eps| must be below 1, got {eps}"
        )));
    }
    Ok((mean_speed(&g.scaled(1.0 + eps))? - mean_speed(g)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Vehicle;
    use approx::assert_relative_eq;

    fn accel_profile() -> SpeedProfile {
        let f = FrozenDynamics::flat(Vehicle::virvolt(10.0)).unwrap();
        SpeedProfile::acceleration(&f, Engine::On, 6.1, 7.94).unwrap()
    }

    #[test]
    fn constant_profile_gives_midpoint() {
        let g = SpeedProfile::from_fn(6.0, 8.0, |_| 0.3).unwrap();
        assert_relative_eq!(mean_speed(&g).unwrap(), 7.0, epsilon = 1e-13);
    }

    #[test]
    fn acceleration_profile_mean() {
        // covered length over elapsed time, closed forms
        let (a, vh) = (6e-4, (0.17f64 / 6e-4).sqrt());
        let t = ((7.94 / vh).atanh() - (6.1 / vh).atanh()) / (a * vh);
        let d = -((vh * vh - 7.94 * 7.94) / (vh * vh - 6.1 * 6.1)).ln() / (2.0 * a);
        let m = mean_speed(&accel_profile()).unwrap();
        assert_relative_eq!(m, d / t, max_relative = 1e-12);
        assert_relative_eq!(m, 7.04, epsilon = 0.01);
    }

    #[test]
    fn scale_invariance() {
        let g = accel_profile();
        assert_eq!(proportional_invariance_check(&g, 0.0).unwrap(), 0.0);
        for eps in [-0.5, 0.3, 0.9] {
            assert!(proportional_invariance_check(&g, eps).unwrap() <= 1e-10);
        }
        let m3 = mean_speed(&g.scaled(3.0)).unwrap();
        assert_relative_eq!(m3, mean_speed(&g).unwrap(), max_relative = 1e-13);
        assert!(proportional_invariance_check(&g, 1.0).is_err());
    }

    #[test]
    fn proportional_perturbation_has_zero_series() {
        let g = accel_profile();
        let series = perturbation_series(&g, &g.scaled(0.2), 8).unwrap();
        for t in &series.terms {
            assert!(t.abs() < 1e-12, "{t}");
        }
        let zero = perturbation_series(&g, &g.scaled(0.0), 4).unwrap();
        assert_eq!(zero.delta, 0.0);
    }

    #[test]
    fn first_term_orthogonality() {
        // ∫ (s - F) / g = L - F T = 0
        let g = accel_profile();
        let f0 = mean_speed(&g).unwrap();
        let t = g.moment(|_| 1.0).unwrap();
        let l = g.moment(|s| s).unwrap();
        assert!((l - f0 * t).abs() <= 1e-10 * l);
    }

    #[test]
    fn series_converges_to_direct_difference() {
        let g = accel_profile();
        let gc = g.clone();
        // one-signed ratio rising from 0 to 0.3 across the band
        let dg = SpeedProfile::from_fn(6.1, 7.94, move |s| 0.3 * gc.eval(s) * (s - 6.1) / 1.84).unwrap();
        let direct = mean_speed(&g.plus(&dg).unwrap()).unwrap() - mean_speed(&g).unwrap();
        let series = perturbation_series(&g, &dg, 8).unwrap();
        assert_relative_eq!(series.sup_ratio, 0.3, max_relative = 1e-9);
        let residuals: Vec<f64> = [1, 2, 4, 8]
            .iter()
            .map(|n| (series.partial_sum(*n) - direct).abs())
            .collect();
        for w in residuals.windows(2) {
            assert!(w[1] <= 0.5 * w[0], "{residuals:?}");
        }
    }

    #[test]
    fn centred_linear_perturbation_converges() {
        let g = accel_profile();
        let gc = g.clone();
        let dg = SpeedProfile::from_fn(6.1, 7.94, move |s| 0.05 * gc.eval(s) * (s - 7.02)).unwrap();
        let direct = mean_speed(&g.plus(&dg).unwrap()).unwrap() - mean_speed(&g).unwrap();
        let series = perturbation_series(&g, &dg, 8).unwrap();
        let r1 = (series.partial_sum(1) - direct).abs();
        let r8 = (series.partial_sum(8) - direct).abs();
        assert!(r8 < 1e-6 * r1, "{r1} {r8}");
    }

    #[test]
    fn large_perturbation_is_rejected() {
        let g = accel_profile();
        assert!(matches!(
            perturbation_series(&g, &g.scaled(1.2), 2),
            Err(Error::DivergenceRisk(_))
        ));
    }

    #[test]
    fn vanishing_profile_is_rejected() {
        let g = SpeedProfile::from_fn(-1.0, 1.0, |s| s).unwrap();
        assert!(matches!(mean_speed(&g), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn table_interpolation_is_monotone_and_exact_at_nodes() {
        let s = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![1.0, 2.0, 2.0, 5.0];
        let g = SpeedProfile::from_table(s.clone(), y.clone()).unwrap();
        for (x, v) in s.iter().zip(&y) {
            assert_eq!(g.eval(*x), *v);
        }
        let mut prev = g.eval(0.0);
        for i in 1..=300 {
            let v = g.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        // flat stretch stays flat
        assert_relative_eq!(g.eval(1.5), 2.0, epsilon = 1e-12);
        assert!(SpeedProfile::from_table(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn table_of_linear_data_is_linear() {
        let s: Vec<f64> = (0..6).map(|i| 6.0 + 0.4 * i as f64).collect();
        let y: Vec<f64> = s.iter().map(|x| 0.5 - 0.01 * x).collect();
        let g = SpeedProfile::from_table(s, y).unwrap();
        assert_relative_eq!(g.eval(6.5), 0.435, epsilon = 1e-12);
    }
}
