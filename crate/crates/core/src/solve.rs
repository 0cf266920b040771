//! Scalar root finding and maximization on a bracket.

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f(lo) > 0 > f(hi)`.
///
/// Returns `None` if the bracket does not have that sign pattern. The
/// interval is shrunk below `xtol` and the midpoint returned.
pub(crate) fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo > 0.0 && fhi < 0.0) {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (b - a).abs() <= xtol {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_root() {
        let r = bisect_root(|x| 2.0 - x * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert!(bisect_root(|x| x + 1.0, 0.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn golden_finds_max() {
        let m = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((m - 0.3).abs() < 1e-10);
    }
}
