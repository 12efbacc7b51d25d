//! Globally adaptive 7/15-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae in [0, 1); odd indices are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule: `error <= max(abs, rel * |value|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance {
        rel: 1e-8,
        abs: 1e-12,
        max_intervals: 4000,
    };

    /// Near machine precision, for ratios of integrals that must cancel.
    pub const TIGHT: Tolerance = Tolerance {
        rel: 1e-13,
        abs: 1e-15,
        max_intervals: 4000,
    };
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    let mut fv = [0.0; 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kron += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kron * half;
    let abs_half = half.abs();
    let res_abs = abs_sum * abs_half;
    let res_asc = asc * abs_half;
    let mut error = ((kron - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Piece { a, b, value, error }
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let first = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    // pieces too narrow to split further
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;

    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(Estimate { value, error });
        }
        if heap.len() >= tol.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b || (worst.b - worst.a).abs() < 1e3 * f64::EPSILON * mid.abs() {
            frozen_value += worst.value;
            frozen_error += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        // resum from scratch to avoid drift in the running totals
        heap.push(left);
        heap.push(right);
        value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
        error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
    }

    let value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
    let error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
    let target = tol.abs.max(tol.rel * value.abs());
    // accept results limited only by roundoff
    if error <= 100.0 * target {
        Ok(Estimate { value, error })
    } else {
        Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}]: estimate {value:e}, error {error:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, Tolerance::TIGHT).unwrap();
        assert_relative_eq!(r.value, 13.5, epsilon = 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let fwd = integrate(f64::exp, 0.0, 1.0, Tolerance::TIGHT).unwrap().value;
        let bwd = integrate(f64::exp, 1.0, 0.0, Tolerance::TIGHT).unwrap().value;
        assert_relative_eq!(fwd, std::f64::consts::E - 1.0, epsilon = 1e-14);
        assert_eq!(fwd, -bwd);
    }

    #[test]
    fn near_singular_log_integrand() {
        // integral of 1/(1 - x) over [0, 1 - 1e-9] = ln(1e9)
        let r = integrate(|x| 1.0 / (1.0 - x), 0.0, 1.0 - 1e-9, Tolerance::DEFAULT).unwrap();
        assert_relative_eq!(r.value, 1e9f64.ln(), max_relative = 1e-7);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::DEFAULT).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-7);
    }
}
