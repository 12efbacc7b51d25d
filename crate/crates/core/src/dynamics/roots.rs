/// Bracketing bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol` or cannot be split further
/// in floating point, whichever comes first. Returns the midpoint of the final
/// bracket. The caller guarantees `f(lo)` and `f(hi)` have opposite signs.
pub(crate) fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let lo_positive = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn decreasing_function() {
        let r = bisect(|x| 1.0 - x, 0.0, 3.0, 1e-9);
        assert!((r - 1.0).abs() < 1e-9);
    }
}
