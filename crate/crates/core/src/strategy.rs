//! Strategic analysis of the one-shot reporting game: utility landscapes
//! over a user's announcement, best responses, and the resulting
//! epsilon-equilibrium.
//!
//! With the opponent's report fixed at `theta`, a user's realized rate is
//! discontinuous at its own report crossing `theta` (the better/worse roles
//! switch there). Under the tie rule of the allocator (user 2 takes the
//! better role at equal reports), user 2's supremum sits just above `theta`
//! and user 1's just below, so the profile `(theta, theta + eps)` survives a
//! unilateral-deviation scan on an `eps`-step grid.

use serde::{Deserialize, Serialize};

use crate::allocator::{allocate, solve_beta_opt, Announcements, TrueChannels, UserIndex};
use crate::bsc::{convolve, entropy, CrossoverProb};
use crate::error::{Error, Result};

/// Gains at or below this threshold count as "no profitable deviation".
pub const EQUILIBRIUM_GAIN_TOL: f64 = 1e-9;

/// One sampled point of a utility sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub p2_report: f64,
    pub beta_opt: f64,
    pub realized_r1: f64,
    pub realized_r2: f64,
}

/// Realized rates and `beta_opt` versus user 2's announcement, with user 1
/// fixed at `theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilitySweep {
    pub theta: CrossoverProb,
    pub samples: Vec<SweepSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseSide {
    AtThetaFromAbove,
    AtThetaFromBelow,
}

/// A best-response report against a fixed opponent announcement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    pub argmax_report: CrossoverProb,
    pub achieved_rate: f64,
    pub side: ResponseSide,
}

/// Verdict of a unilateral-deviation scan around the profile
/// `(theta, theta + epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub profile: Announcements,
    pub epsilon: f64,
    pub user1_best_gain: f64,
    pub user2_best_gain: f64,
    pub is_equilibrium: bool,
}

/// The given user's realized rate under the reports and true parameters.
pub fn realized_utility(
    user: UserIndex,
    reports: Announcements,
    truths: TrueChannels,
) -> Result<f64> {
    let result = allocate(reports, truths)?;
    Ok(match user {
        UserIndex::One => result.realized.r1,
        UserIndex::Two => result.realized.r2,
    })
}

/// Sweep user 2's announcement over a uniform grid of `grid_size` points on
/// `[grid_min, grid_max]`, holding user 1's report at `theta`.
pub fn utility_sweep(
    theta: CrossoverProb,
    truths: TrueChannels,
    grid_size: usize,
    grid_min: f64,
    grid_max: f64,
) -> Result<UtilitySweep> {
    if grid_size < 3 {
        return Err(Error::Domain(format!(
            "sweep grid size {grid_size} must be at least 3"
        )));
    }
    if !(0.0 < grid_min && grid_min < grid_max && grid_max < 0.5) {
        return Err(Error::Domain(format!(
            "sweep bounds [{grid_min}, {grid_max}] must satisfy 0 < min < max < 0.5"
        )));
    }
    let mut samples = Vec::with_capacity(grid_size);
    for k in 0..grid_size {
        let t = k as f64 / (grid_size - 1) as f64;
        let p2_report = grid_min + t * (grid_max - grid_min);
        let reports = Announcements {
            p1: theta,
            p2: CrossoverProb::new(p2_report)?,
        };
        let result = allocate(reports, truths)?;
        samples.push(SweepSample {
            p2_report,
            beta_opt: result.beta_opt.value(),
            realized_r1: result.realized.r1,
            realized_r2: result.realized.r2,
        });
    }
    Ok(UtilitySweep { theta, samples })
}

/// Size of the jump in user 2's realized rate as its announcement crosses
/// the opponent's report `theta`. Returns `(left_limit, right_limit, gap)`.
///
/// Both one-sided limits share the degenerate equal-report `beta_opt`; they
/// differ only through the role formula, so the gap closes exactly when the
/// true parameter equals `theta`.
pub fn discontinuity_gap(theta: CrossoverProb, true_p2: CrossoverProb) -> Result<(f64, f64, f64)> {
    let beta = solve_beta_opt(theta, theta)?.value();
    let hb = entropy(convolve(beta, true_p2.value()));
    let left = hb - entropy(true_p2.value());
    let right = 1.0 - hb;
    Ok((left, right, (right - left).abs()))
}

/// The epsilon-shifted best response against a fixed opponent report.
///
/// User 2 answers `theta + eps` (roles: it stays the worse receiver, keeping
/// `beta_opt` as small as possible); user 1 answers `theta - eps` (it stays
/// the better receiver, keeping `beta_opt` as large as possible). The
/// achieved rate is evaluated with the opponent's true parameter taken equal
/// to its announcement, which does not affect the responder's own rate.
pub fn best_response(
    theta: CrossoverProb,
    true_p: CrossoverProb,
    user: UserIndex,
    epsilon: f64,
) -> Result<BestResponse> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon {epsilon} must be positive")));
    }
    let (report, side, reports, truths) = match user {
        UserIndex::Two => {
            let report = CrossoverProb::new(theta.value() + epsilon)?;
            (
                report,
                ResponseSide::AtThetaFromAbove,
                Announcements { p1: theta, p2: report },
                TrueChannels { p1: theta, p2: true_p },
            )
        }
        UserIndex::One => {
            let report = CrossoverProb::new(theta.value() - epsilon)?;
            (
                report,
                ResponseSide::AtThetaFromBelow,
                Announcements { p1: report, p2: theta },
                TrueChannels { p1: true_p, p2: theta },
            )
        }
    };
    let achieved_rate = realized_utility(user, reports, truths)?;
    Ok(BestResponse {
        argmax_report: report,
        achieved_rate,
        side,
    })
}

/// Exhaustive scan of a user's realized rate over candidate reports; the
/// verification oracle for `best_response`. Smallest report wins ties.
pub fn grid_best_response(
    theta: CrossoverProb,
    true_p: CrossoverProb,
    user: UserIndex,
    grid: &[f64],
) -> Result<(CrossoverProb, f64)> {
    let mut best: Option<(CrossoverProb, f64)> = None;
    for &report_v in grid {
        let report = CrossoverProb::new(report_v)?;
        let (reports, truths) = match user {
            UserIndex::Two => (
                Announcements { p1: theta, p2: report },
                TrueChannels { p1: theta, p2: true_p },
            ),
            UserIndex::One => (
                Announcements { p1: report, p2: theta },
                TrueChannels { p1: true_p, p2: theta },
            ),
        };
        let rate = realized_utility(user, reports, truths)?;
        if best.map_or(true, |(_, b)| rate > b) {
            best = Some((report, rate));
        }
    }
    best.ok_or_else(|| Error::Domain("empty report grid".into()))
}

/// Uniform report grid on `[lo, hi]`, the default oracle grid for scans.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Verify by forward differences that `beta_opt` increases in each announced
/// parameter, on random pairs in both orderings. Returns true iff every
/// sampled difference is positive.
pub fn beta_monotonicity_check(num_samples: usize, seed: u64, step: f64) -> Result<bool> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sorted_beta = |a: f64, b: f64| -> Result<f64> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Ok(solve_beta_opt(CrossoverProb::new(lo)?, CrossoverProb::new(hi)?)?.value())
    };
    for _ in 0..num_samples {
        // unordered draw, so both report orderings get exercised
        let a: f64 = rng.gen_range(0.02..0.47);
        let mut b: f64 = rng.gen_range(0.02..0.47);
        while (a - b).abs() < 2.0 * step {
            b = rng.gen_range(0.02..0.47);
        }
        let base = sorted_beta(a, b)?;
        if sorted_beta(a + step, b)? <= base || sorted_beta(a, b + step)? <= base {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Scan unilateral deviations around an arbitrary report profile.
///
/// Each user's deviation candidates are its own profile report shifted by
/// whole multiples of `epsilon` (up to `grid_steps` in each direction), so
/// the profile itself and the exact tie with the opponent are representable
/// whenever the reports differ by a multiple of `epsilon`.
pub fn equilibrium_scan(
    profile: Announcements,
    truths: TrueChannels,
    epsilon: f64,
    grid_steps: usize,
) -> Result<EquilibriumReport> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon {epsilon} must be positive")));
    }
    let base = allocate(profile, truths)?;
    let (profile_u1, profile_u2) = (base.realized.r1, base.realized.r2);

    let mut best_gain = [f64::NEG_INFINITY, f64::NEG_INFINITY];
    for (slot, user) in [(0, UserIndex::One), (1, UserIndex::Two)] {
        let own = match user {
            UserIndex::One => profile.p1.value(),
            UserIndex::Two => profile.p2.value(),
        };
        let profile_rate = match user {
            UserIndex::One => profile_u1,
            UserIndex::Two => profile_u2,
        };
        for k in -(grid_steps as i64)..=(grid_steps as i64) {
            if k == 0 {
                continue;
            }
            let dev = own + k as f64 * epsilon;
            let Ok(dev) = CrossoverProb::new(dev) else {
                continue; // off the action set
            };
            let reports = match user {
                UserIndex::One => Announcements { p1: dev, p2: profile.p2 },
                UserIndex::Two => Announcements { p1: profile.p1, p2: dev },
            };
            let rate = realized_utility(user, reports, truths)?;
            let gain = rate - profile_rate;
            if gain > best_gain[slot] {
                best_gain[slot] = gain;
            }
        }
    }

    Ok(EquilibriumReport {
        profile,
        epsilon,
        user1_best_gain: best_gain[0],
        user2_best_gain: best_gain[1],
        is_equilibrium: best_gain[0] <= EQUILIBRIUM_GAIN_TOL
            && best_gain[1] <= EQUILIBRIUM_GAIN_TOL,
    })
}

/// [`equilibrium_scan`] specialized to the candidate equilibrium profile
/// `(theta, theta + epsilon)`, whose deviation grid shares the step
/// `epsilon`.
pub fn equilibrium_check(
    theta: CrossoverProb,
    truths: TrueChannels,
    epsilon: f64,
    grid_steps: usize,
) -> Result<EquilibriumReport> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon {epsilon} must be positive")));
    }
    let profile = Announcements {
        p1: theta,
        p2: CrossoverProb::new(theta.value() + epsilon)?,
    };
    equilibrium_scan(profile, truths, epsilon, grid_steps)
}

/// Alternate epsilon-shifted best responses for a fixed number of rounds.
/// Purely observational; no convergence is claimed.
pub fn iterated_best_response(
    initial: Announcements,
    epsilon: f64,
    rounds: usize,
) -> Result<Vec<Announcements>> {
    let mut trail = vec![initial];
    let mut current = initial;
    for _ in 0..rounds {
        let r1 = CrossoverProb::new(current.p2.value() - epsilon)?;
        let r2 = CrossoverProb::new(r1.value() + epsilon)?;
        current = Announcements { p1: r1, p2: r2 };
        trail.push(current);
    }
    Ok(trail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BETA_OPT_01_02: f64 = 0.135951978461467412;

    fn p(v: f64) -> CrossoverProb {
        CrossoverProb::new(v).unwrap()
    }

    fn truths(p1: f64, p2: f64) -> TrueChannels {
        TrueChannels { p1: p(p1), p2: p(p2) }
    }

    #[test]
    fn truthful_utilities_match_closed_form() {
        let ann = Announcements { p1: p(0.1), p2: p(0.2) };
        let u2 = realized_utility(UserIndex::Two, ann, truths(0.1, 0.2)).unwrap();
        assert!((u2 - (1.0 - entropy(convolve(BETA_OPT_01_02, 0.2)))).abs() < 1e-10);
        assert!((u2 - 0.142417159910516866).abs() < 1e-10);

        let u1 = realized_utility(UserIndex::One, ann, truths(0.1, 0.2)).unwrap();
        assert!((u1 - 0.270113279007409091).abs() < 1e-10);
    }

    #[test]
    fn extreme_overreport_hurts() {
        let ann = Announcements { p1: p(0.1), p2: p(0.499) };
        let braggart = realized_utility(UserIndex::Two, ann, truths(0.1, 0.2)).unwrap();
        let honest = realized_utility(
            UserIndex::Two,
            Announcements { p1: p(0.1), p2: p(0.2) },
            truths(0.1, 0.2),
        )
        .unwrap();
        assert!(braggart < honest);
        // independently computed with 30-digit arithmetic
        assert!((braggart - 0.140022104798541851).abs() < 1e-10);
    }

    #[test]
    fn sweep_beta_strictly_increasing() {
        let sweep = utility_sweep(p(0.1), truths(0.1, 0.2), 400, 0.001, 0.499).unwrap();
        assert_eq!(sweep.samples.len(), 400);
        for w in sweep.samples.windows(2) {
            assert!(w[1].p2_report > w[0].p2_report);
            assert!(w[1].beta_opt > w[0].beta_opt, "beta not increasing");
        }
    }

    #[test]
    fn sweep_r2_rises_then_falls_around_theta() {
        let sweep = utility_sweep(p(0.1), truths(0.1, 0.2), 400, 0.001, 0.499).unwrap();
        for w in sweep.samples.windows(2) {
            if w[1].p2_report < 0.1 {
                assert!(w[1].realized_r2 > w[0].realized_r2);
            } else if w[0].p2_report > 0.1 {
                assert!(w[1].realized_r2 < w[0].realized_r2);
            }
        }
    }

    #[test]
    fn jump_gap_open_iff_types_differ() {
        let (_, _, gap) = discontinuity_gap(p(0.1), p(0.2)).unwrap();
        assert!(gap > 1e-3, "gap = {gap}");
        let (left, right, gap) = discontinuity_gap(p(0.1), p(0.1)).unwrap();
        assert!(gap < 1e-9, "gap = {gap}, limits {left} / {right}");
    }

    #[test]
    fn gap_shrinks_as_types_approach() {
        let mut prev = f64::INFINITY;
        for d in [0.05, 0.01, 0.002] {
            let (_, _, gap) = discontinuity_gap(p(0.1), p(0.1 + d)).unwrap();
            assert!(gap < prev);
            prev = gap;
        }
    }

    #[test]
    fn best_response_reports() {
        let br = best_response(p(0.1), p(0.2), UserIndex::Two, 1e-6).unwrap();
        assert!((br.argmax_report.value() - 0.100001).abs() < 1e-12);
        assert_eq!(br.side, ResponseSide::AtThetaFromAbove);

        let br = best_response(p(0.3), p(0.1), UserIndex::One, 1e-6).unwrap();
        assert!((br.argmax_report.value() - 0.299999).abs() < 1e-12);
        assert_eq!(br.side, ResponseSide::AtThetaFromBelow);

        // epsilon pushing the report out of (0, 0.5) is rejected
        assert!(best_response(p(0.4999999), p(0.2), UserIndex::Two, 1e-6).is_err());
    }

    #[test]
    fn grid_oracle_confirms_best_response_location() {
        let grid = uniform_grid(0.001, 0.499, 10_000);
        let (argmax, _) = grid_best_response(p(0.1), p(0.2), UserIndex::Two, &grid).unwrap();
        let first_above = grid.iter().copied().find(|&x| x >= 0.1).unwrap();
        assert_eq!(argmax.value(), first_above);
    }

    #[test]
    fn monotonicity_check_passes_both_steps() {
        assert!(beta_monotonicity_check(100, 42, 1e-4).unwrap());
        assert!(beta_monotonicity_check(100, 42, 1e-5).unwrap());
    }

    #[test]
    fn epsilon_profile_is_grid_equilibrium() {
        let report = equilibrium_check(p(0.1), truths(0.1, 0.2), 1e-3, 500).unwrap();
        assert!(
            report.is_equilibrium,
            "gains: {} / {}",
            report.user1_best_gain, report.user2_best_gain
        );
        assert!(report.user1_best_gain <= EQUILIBRIUM_GAIN_TOL);
        assert!(report.user2_best_gain <= EQUILIBRIUM_GAIN_TOL);
    }

    #[test]
    fn wide_profile_is_not_an_equilibrium() {
        // profile (0.1, 0.3): user 2 profits by walking its report down
        // toward the opponent's 0.1 (it stays in the worse role and shrinks
        // beta as little as possible from above)
        let profile = Announcements { p1: p(0.1), p2: p(0.3) };
        let report = equilibrium_scan(profile, truths(0.1, 0.2), 1e-3, 250).unwrap();
        assert!(!report.is_equilibrium);
        assert!(report.user2_best_gain > 1e-3);
    }

    #[test]
    fn misaligned_profile_deviation_scan() {
        // profile (0.2, 0.2 + eps) with true types (0.1, 0.2): the scan just
        // reports gain signs; user 2 must profit by walking down toward 0.1
        let report = equilibrium_check(p(0.2), truths(0.1, 0.2), 1e-3, 500).unwrap();
        assert!(!report.is_equilibrium);
        assert!(report.user2_best_gain > 0.0);
    }

    #[test]
    fn random_scenarios_argmax_near_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(201);
        let grid = uniform_grid(0.001, 0.499, 2_000);
        let step = grid[1] - grid[0];
        for _ in 0..20 {
            let theta = rng.gen_range(0.05..0.45);
            let p2 = rng.gen_range(0.05..0.45);
            let (argmax, _) =
                grid_best_response(p(theta), p(p2), UserIndex::Two, &grid).unwrap();
            assert!(
                (argmax.value() - theta).abs() <= step + 1e-12,
                "argmax {} vs theta {theta}",
                argmax.value()
            );
        }
    }

    #[test]
    fn iterated_responses_stay_close() {
        let initial = Announcements { p1: p(0.1), p2: p(0.3) };
        let trail = iterated_best_response(initial, 1e-3, 5).unwrap();
        assert_eq!(trail.len(), 6);
        for ann in &trail[1..] {
            assert!((ann.p2.value() - ann.p1.value() - 1e-3).abs() < 1e-12);
        }
    }
}
