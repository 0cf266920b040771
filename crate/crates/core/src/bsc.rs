//! Pure functions of the two-user binary symmetric broadcast channel.
//!
//! Everything here is expressed in bits (base-2 logarithms). A channel is
//! described by its crossover probability `p` in the open interval
//! `(0, 0.5)`; the operating point on the Pareto surface is picked by a
//! time-sharing coefficient `beta` in `[0, 0.5]`. For a sorted pair
//! `p1 < p2` the surface is
//!
//! ```text
//! r1 = H(beta * p1) - H(p1)      (better receiver)
//! r2 = 1 - H(beta * p2)          (worse receiver)
//! ```
//!
//! where `beta * p = beta (1 - p) + (1 - beta) p` is parameter convolution
//! and `H` the binary entropy. The module also carries the proportional-fair
//! objective `r1 * r2`, its analytic derivative in `beta`, and the ratio
//! `g` (with its closed-form partials) used to establish that the optimal
//! `beta` moves monotonically with either announced parameter.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// A BSC crossover probability, strictly inside `(0, 0.5)`.
///
/// Serves both as a user's private (true) parameter and as an announced
/// (possibly misreported) one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CrossoverProb(f64);

impl CrossoverProb {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 0.5 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidCrossover(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CrossoverProb {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CrossoverProb> for f64 {
    fn from(p: CrossoverProb) -> f64 {
        p.0
    }
}

/// Time-sharing coefficient `beta` in `[0, 0.5]` (the "cloud size" of the
/// superposition code).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TimeSharing(f64);

impl TimeSharing {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=0.5).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidTimeSharing(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TimeSharing {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeSharing> for f64 {
    fn from(b: TimeSharing) -> f64 {
        b.0
    }
}

/// A pair of rates in bits per channel use, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        for r in [r1, r2] {
            if !r.is_finite() || !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidRate(r));
            }
        }
        Ok(Self { r1, r2 })
    }
}

/// Binary entropy in bits; `H(0) = H(1) = 0` by continuous extension.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    Ok(entropy(x))
}

pub(crate) fn entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `log2((1 - x) / x)`, the derivative of binary entropy.
pub(crate) fn log_ratio(x: f64) -> f64 {
    ((1.0 - x) / x).log2()
}

pub(crate) fn convolve(beta: f64, p: f64) -> f64 {
    p + beta * (1.0 - 2.0 * p)
}

/// Parameter convolution `beta * p = beta (1-p) + (1-beta) p`.
pub fn binary_convolve(beta: TimeSharing, p: CrossoverProb) -> f64 {
    convolve(beta.value(), p.value())
}

fn require_sorted(p1: CrossoverProb, p2: CrossoverProb) -> Result<(f64, f64)> {
    if p1.value() >= p2.value() {
        return Err(Error::Ordering {
            p1: p1.value(),
            p2: p2.value(),
        });
    }
    Ok((p1.value(), p2.value()))
}

fn require_interior(beta: TimeSharing) -> Result<f64> {
    let b = beta.value();
    if b <= 0.0 || b >= 0.5 {
        return Err(Error::Domain(format!(
            "beta = {b} must lie strictly inside (0, 0.5)"
        )));
    }
    Ok(b)
}

/// Pareto-surface rates for the sorted pair `p1 < p2` at time sharing `beta`.
pub fn pareto_rates(beta: TimeSharing, p1: CrossoverProb, p2: CrossoverProb) -> Result<RatePair> {
    let (p1, p2) = require_sorted(p1, p2)?;
    let b = beta.value();
    RatePair::new(
        entropy(convolve(b, p1)) - entropy(p1),
        1.0 - entropy(convolve(b, p2)),
    )
}

/// Whether `r` lies in the capacity region of the sorted pair `p1 < p2`.
///
/// Uses the monotone structure of the region boundary: the `r1` bound
/// increases in `beta` while the `r2` bound decreases, so it suffices to
/// find the smallest `beta` that admits `r1` and check `r2` there.
pub fn region_contains(r: RatePair, p1: CrossoverProb, p2: CrossoverProb) -> Result<bool> {
    let (p1v, p2v) = require_sorted(p1, p2)?;
    let r1_bound = |b: f64| entropy(convolve(b, p1v)) - entropy(p1v);
    const EPS: f64 = 1e-12;

    let beta_min = if r.r1 <= 0.0 {
        0.0
    } else if r.r1 > r1_bound(0.5) + EPS {
        return Ok(false);
    } else {
        // bisect for the smallest beta with r1_bound(beta) >= r1
        let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if r1_bound(mid) >= r.r1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    Ok(r.r2 <= 1.0 - entropy(convolve(beta_min, p2v)) + EPS)
}

/// Proportional-fair objective: the product of the Pareto rates.
pub fn pf_objective(beta: TimeSharing, p1: CrossoverProb, p2: CrossoverProb) -> Result<f64> {
    let rates = pareto_rates(beta, p1, p2)?;
    Ok(rates.r1 * rates.r2)
}

pub(crate) fn pf_objective_derivative_raw(beta: f64, p1: f64, p2: f64) -> f64 {
    let b1 = convolve(beta, p1);
    let b2 = convolve(beta, p2);
    (1.0 - entropy(b2)) * (1.0 - 2.0 * p1) * log_ratio(b1)
        - (entropy(b1) - entropy(p1)) * (1.0 - 2.0 * p2) * log_ratio(b2)
}

/// Analytic derivative of the proportional-fair objective in `beta`.
///
/// Positive below the optimum, negative above it; diverges to `+inf` as
/// `beta -> 0`, so the endpoints are rejected.
pub fn pf_objective_derivative(
    beta: TimeSharing,
    p1: CrossoverProb,
    p2: CrossoverProb,
) -> Result<f64> {
    let (p1, p2) = require_sorted(p1, p2)?;
    let b = require_interior(beta)?;
    Ok(pf_objective_derivative_raw(b, p1, p2))
}

pub(crate) fn g_ratio_raw(p1: f64, p2: f64, beta: f64) -> f64 {
    let b1 = convolve(beta, p1);
    let b2 = convolve(beta, p2);
    -(entropy(b1) - entropy(p1)) / (1.0 - entropy(b2)) * (1.0 - 2.0 * p2) / (1.0 - 2.0 * p1)
        * log_ratio(b2)
        / log_ratio(b1)
}

/// The ratio `g(p1, p2, beta) = (r1 / r2) * (dr2/dr1)` along the Pareto
/// surface. Finite and negative on the whole domain; equals exactly `-1` at
/// the proportional-fair optimum.
pub fn g_ratio(p1: CrossoverProb, p2: CrossoverProb, beta: TimeSharing) -> Result<f64> {
    let (p1, p2) = require_sorted(p1, p2)?;
    let b = require_interior(beta)?;
    Ok(g_ratio_raw(p1, p2, b))
}

/// Closed-form partial derivatives `(dg/dp1, dg/dp2, dg/dbeta)`.
///
/// The first two are positive and the third negative everywhere on the
/// domain, which is what forces the optimal `beta` to increase with either
/// announced parameter. The `1/ln 2` factors come from differentiating
/// base-2 logarithms.
pub fn g_partials(
    p1: CrossoverProb,
    p2: CrossoverProb,
    beta: TimeSharing,
) -> Result<(f64, f64, f64)> {
    let (p1, p2) = require_sorted(p1, p2)?;
    let b = require_interior(beta)?;

    let b1 = convolve(b, p1);
    let b2 = convolve(b, p2);
    let l1 = log_ratio(b1);
    let l2 = log_ratio(b2);
    let n = entropy(b1) - entropy(p1);
    let r2 = 1.0 - entropy(b2);
    let q1 = 1.0 - 2.0 * p1;
    let q2 = 1.0 - 2.0 * p2;
    let qb = 1.0 - 2.0 * b;

    let c1 = -q2 * l2 / r2;
    let d1 = 1.0 / (q1 * l1 * q1 * l1);
    let dg_dp1 = c1
        * d1
        * (q1 * qb * (l1 * l1 + n / (b1 * (1.0 - b1) * LN_2))
            - l1 * (q1 * log_ratio(p1) - 2.0 * n));

    let c2 = -n / (q1 * l1);
    let d2 = 1.0 / (r2 * r2);
    let dg_dp2 = c2 * d2 * (qb * q2 * (l2 * l2 - r2 / (b2 * (1.0 - b2) * LN_2)) - 2.0 * l2 * r2);

    let c3 = -q2 / q1;
    let d3 = 1.0 / (r2 * l1 * r2 * l1);
    let dg_db = c3
        * d3
        * (r2 * n * (q1 * l2 / (b1 * (1.0 - b1) * LN_2) - q2 * l1 / (b2 * (1.0 - b2) * LN_2))
            + l2 * l1 * (r2 * l1 * q1 + n * l2 * q2));

    Ok((dg_dp1, dg_dp2, dg_db))
}

/// The auxiliary function `f(beta, p) = (1-2p) / [(1-b) b log2((1-b)/b)]`
/// with `b = beta * p`; positive everywhere and strictly decreasing in `p`.
pub fn f_mono(beta: TimeSharing, p: CrossoverProb) -> Result<f64> {
    let b = require_interior(beta)?;
    let bp = convolve(b, p.value());
    Ok((1.0 - 2.0 * p.value()) / ((1.0 - bp) * bp * log_ratio(bp)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Independently computed with 30-digit arithmetic.
    const H_01: f64 = 0.468995593589281221;
    pub(crate) const BETA_OPT_01_02: f64 = 0.135951978461467412;
    const PARETO_02_01_02: (f64, f64) = (0.357750778903336674, 0.095618542275506102);

    fn p(v: f64) -> CrossoverProb {
        CrossoverProb::new(v).unwrap()
    }

    fn ts(v: f64) -> TimeSharing {
        TimeSharing::new(v).unwrap()
    }

    #[test]
    fn crossover_bounds_rejected() {
        for v in [0.0, 0.5, -0.1, 0.6, f64::NAN] {
            assert!(CrossoverProb::new(v).is_err(), "{v} should be rejected");
        }
        assert!(CrossoverProb::new(1e-9).is_ok());
        assert!(CrossoverProb::new(0.5 - 1e-9).is_ok());
    }

    #[test]
    fn entropy_reference_points() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.1).unwrap() - H_01).abs() < 1e-15);
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn entropy_symmetric_and_concave() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert!((entropy(x) - entropy(1.0 - x)).abs() < 1e-12);
        }
        // midpoint concavity on a grid
        for i in 1..50 {
            for j in (i + 1)..50 {
                let (x, y) = (i as f64 / 50.0, j as f64 / 50.0);
                assert!(entropy(0.5 * (x + y)) >= 0.5 * (entropy(x) + entropy(y)) - 1e-12);
            }
        }
    }

    #[test]
    fn convolve_reference_points() {
        assert_eq!(binary_convolve(ts(0.0), p(0.1)), 0.1);
        assert_eq!(binary_convolve(ts(0.5), p(0.1)), 0.5);
        assert!((binary_convolve(ts(0.2), p(0.1)) - 0.26).abs() < 1e-15);
    }

    #[test]
    fn convolve_monotone() {
        for i in 0..50 {
            let beta = i as f64 * 0.01;
            let pv = 0.17;
            assert!(convolve(beta + 0.01, pv) > convolve(beta, pv));
        }
        for i in 1..49 {
            let pv = i as f64 * 0.01;
            assert!(convolve(0.3, pv + 0.01) > convolve(0.3, pv));
        }
    }

    #[test]
    fn pareto_corners_and_reference() {
        let r = pareto_rates(ts(0.0), p(0.1), p(0.2)).unwrap();
        assert_eq!(r.r1, 0.0);
        assert!((r.r2 - (1.0 - entropy(0.2))).abs() < 1e-15);

        let r = pareto_rates(ts(0.5), p(0.1), p(0.2)).unwrap();
        assert_eq!(r.r2, 0.0);
        assert!((r.r1 - (1.0 - entropy(0.1))).abs() < 1e-15);

        let r = pareto_rates(ts(0.2), p(0.1), p(0.2)).unwrap();
        assert!((r.r1 - PARETO_02_01_02.0).abs() < 1e-15);
        assert!((r.r2 - PARETO_02_01_02.1).abs() < 1e-15);

        assert!(matches!(
            pareto_rates(ts(0.2), p(0.2), p(0.1)),
            Err(Error::Ordering { .. })
        ));
    }

    #[test]
    fn pareto_monotone_in_beta() {
        let mut prev = pareto_rates(ts(0.0), p(0.1), p(0.3)).unwrap();
        for i in 1..=100 {
            let r = pareto_rates(ts(i as f64 * 0.005), p(0.1), p(0.3)).unwrap();
            assert!(r.r1 > prev.r1);
            assert!(r.r2 < prev.r2);
            prev = r;
        }
    }

    #[test]
    fn region_membership() {
        let corner = RatePair::new(0.0, 1.0 - entropy(0.2)).unwrap();
        assert!(region_contains(corner, p(0.1), p(0.2)).unwrap());

        let outside = RatePair::new(1.0 - entropy(0.1) + 0.01, 0.01).unwrap();
        assert!(!region_contains(outside, p(0.1), p(0.2)).unwrap());

        let on = pareto_rates(ts(0.3), p(0.1), p(0.2)).unwrap();
        let interior = RatePair::new(on.r1 * 0.99, on.r2 * 0.99).unwrap();
        assert!(region_contains(interior, p(0.1), p(0.2)).unwrap());
    }

    #[test]
    fn objective_zero_at_corners() {
        assert_eq!(pf_objective(ts(0.0), p(0.1), p(0.2)).unwrap(), 0.0);
        assert_eq!(pf_objective(ts(0.5), p(0.1), p(0.2)).unwrap(), 0.0);
        let v = pf_objective(ts(0.2), p(0.1), p(0.2)).unwrap();
        assert!((v - PARETO_02_01_02.0 * PARETO_02_01_02.1).abs() < 1e-15);
    }

    #[test]
    fn derivative_root_and_sign() {
        let d = pf_objective_derivative(ts(BETA_OPT_01_02), p(0.1), p(0.2)).unwrap();
        assert!(d.abs() < 1e-8, "derivative at optimum: {d}");
        assert!(pf_objective_derivative(ts(1e-4), p(0.1), p(0.2)).unwrap() > 0.0);
        assert!(pf_objective_derivative(ts(0.0), p(0.1), p(0.2)).is_err());
        assert!(pf_objective_derivative(ts(0.5), p(0.1), p(0.2)).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..300 {
            let p1 = rng.gen_range(0.02..0.46);
            let p2 = rng.gen_range(p1 + 0.01..0.49);
            let b = rng.gen_range(0.02..0.48);
            let analytic = pf_objective_derivative(ts(b), p(p1), p(p2)).unwrap();
            let fd = (pf_objective(ts(b + h), p(p1), p(p2)).unwrap()
                - pf_objective(ts(b - h), p(p1), p(p2)).unwrap())
                / (2.0 * h);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs() + 1e-9,
                "analytic {analytic} vs fd {fd} at ({b}, {p1}, {p2})"
            );
        }
    }

    #[test]
    fn g_is_minus_one_at_optimum() {
        let g = g_ratio(p(0.1), p(0.2), ts(BETA_OPT_01_02)).unwrap();
        assert!((g + 1.0).abs() < 1e-8, "g = {g}");
    }

    #[test]
    fn g_increases_toward_minus_one_below_optimum() {
        // dg/dbeta < 0, so g rises toward -1 as beta falls below the optimum
        let mut prev = g_ratio(p(0.1), p(0.2), ts(BETA_OPT_01_02)).unwrap();
        let mut b = BETA_OPT_01_02;
        for _ in 0..10 {
            b -= 0.012;
            let g = g_ratio(p(0.1), p(0.2), ts(b)).unwrap();
            assert!(g > prev);
            assert!(g > -1.0);
            prev = g;
        }
    }

    #[test]
    fn g_finite_negative_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let p1 = rng.gen_range(0.01..0.47);
            let p2 = rng.gen_range(p1 + 0.005..0.49);
            let b = rng.gen_range(0.01..0.49);
            let g = g_ratio(p(p1), p(p2), ts(b)).unwrap();
            assert!(g.is_finite() && g < 0.0, "g = {g} at ({p1}, {p2}, {b})");
        }
    }

    #[test]
    fn g_partials_signs() {
        for (p1, p2, b) in [(0.1, 0.2, 0.15), (0.05, 0.45, 0.25), (0.2, 0.3, 0.4)] {
            let (d1, d2, db) = g_partials(p(p1), p(p2), ts(b)).unwrap();
            assert!(d1 > 0.0 && d2 > 0.0 && db < 0.0, "({d1}, {d2}, {db})");
        }
    }

    #[test]
    fn g_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-6;
        for _ in 0..300 {
            let p1 = rng.gen_range(0.02..0.45);
            let p2 = rng.gen_range(p1 + 0.01..0.48);
            let b = rng.gen_range(0.02..0.48);
            let (d1, d2, db) = g_partials(p(p1), p(p2), ts(b)).unwrap();
            let fd1 = (g_ratio_raw(p1 + h, p2, b) - g_ratio_raw(p1 - h, p2, b)) / (2.0 * h);
            let fd2 = (g_ratio_raw(p1, p2 + h, b) - g_ratio_raw(p1, p2 - h, b)) / (2.0 * h);
            let fdb = (g_ratio_raw(p1, p2, b + h) - g_ratio_raw(p1, p2, b - h)) / (2.0 * h);
            // compare against the gradient scale: the finite difference
            // itself carries |g| * eps / h roundoff noise, which swamps the
            // small components wherever one partial dwarfs another
            let scale = d1.abs().max(d2.abs()).max(db.abs());
            for (a, f) in [(d1, fd1), (d2, fd2), (db, fdb)] {
                assert!(
                    (a - f).abs() <= 1e-4 * scale + 1e-9,
                    "analytic {a} vs fd {f} at ({p1}, {p2}, {b})"
                );
            }
        }
    }

    #[test]
    fn f_mono_positive_and_decreasing() {
        assert!(f_mono(ts(0.2), p(0.1)).unwrap() > f_mono(ts(0.2), p(0.2)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = 1e-6;
        for _ in 0..100 {
            let b = rng.gen_range(0.02..0.48);
            let pv = rng.gen_range(0.02..0.47);
            let f = f_mono(ts(b), p(pv)).unwrap();
            assert!(f > 0.0);
            let fd =
                (f_mono(ts(b), p(pv + h)).unwrap() - f_mono(ts(b), p(pv - h)).unwrap()) / (2.0 * h);
            assert!(fd < 0.0, "df/dp = {fd} at ({b}, {pv})");
        }
    }

    #[test]
    fn objective_unimodal() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..30 {
            let p1 = rng.gen_range(0.02..0.45);
            let p2 = rng.gen_range(p1 + 0.01..0.49);
            let n = 2000;
            let mut rising = true;
            let mut switches = 0;
            let mut prev = 0.0;
            for k in 1..n {
                let b = 0.5 * k as f64 / n as f64;
                let v = pf_objective(ts(b), p(p1), p(p2)).unwrap();
                if k > 1 {
                    let up = v > prev;
                    if rising && !up {
                        rising = false;
                        switches += 1;
                    } else if !rising && up {
                        switches += 1;
                    }
                }
                prev = v;
            }
            assert_eq!(switches, 1, "not unimodal for ({p1}, {p2})");
        }
    }
}
