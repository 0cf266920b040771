//! The resource manager: proportional-fair time sharing from announced
//! parameters, role assignment, and assigned versus realized rates.
//!
//! Roles follow the announced ordering: the user with the smaller report is
//! treated as the better receiver. When reports tie, user 2 takes the better
//! role; this is what makes announcing "just above the opponent" a stable
//! profile in the one-shot game (see the strategy module).
//!
//! Realized rates substitute each user's true parameter into the rate
//! formula of its assigned role at the same `beta_opt`. No decodability cap
//! is applied when a user claims a better channel than it has.

use serde::{Deserialize, Serialize};

use crate::bsc::{entropy, log_ratio, convolve, pf_objective_derivative_raw};
use crate::bsc::{CrossoverProb, RatePair, TimeSharing};
use crate::error::{Error, Result};
use crate::solve::{bisect_root, golden_max};

/// The announced (public, possibly misreported) channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Announcements {
    pub p1: CrossoverProb,
    pub p2: CrossoverProb,
}

/// The private (true) channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueChannels {
    pub p1: CrossoverProb,
    pub p2: CrossoverProb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum UserIndex {
    One,
    Two,
}

impl From<UserIndex> for u8 {
    fn from(u: UserIndex) -> u8 {
        match u {
            UserIndex::One => 1,
            UserIndex::Two => 2,
        }
    }
}

impl TryFrom<u8> for UserIndex {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(UserIndex::One),
            2 => Ok(UserIndex::Two),
            _ => Err(Error::Domain(format!("user index {v} must be 1 or 2"))),
        }
    }
}

/// Outcome of one allocation round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub beta_opt: TimeSharing,
    /// Which user was assigned the better-receiver role (smaller report;
    /// user 2 on a tie).
    pub better_user: UserIndex,
    /// Rates computed from the reports, indexed by user.
    pub assigned: RatePair,
    /// Rates with each user's true parameter substituted into its assigned
    /// role's formula, indexed by user.
    pub realized: RatePair,
}

const BETA_LO: f64 = 1e-9;
const BETA_HI: f64 = 0.5 - 1e-9;
const BETA_XTOL: f64 = 1e-12;

/// Derivative of the equal-report objective `(H(b*p) - H(p)) (1 - H(b*p))`.
pub(crate) fn degenerate_derivative(beta: f64, p: f64) -> f64 {
    let bp = convolve(beta, p);
    (1.0 - 2.0 * p) * log_ratio(bp) * (1.0 + entropy(p) - 2.0 * entropy(bp))
}

/// Solve for the proportional-fair `beta_opt` of the sorted pair `pa <= pb`.
///
/// Bracketed bisection on the analytic derivative; the derivative tends to
/// `+inf` at the left endpoint and is negative approaching `0.5`, so the
/// bracket is sound. Falls back to golden-section maximization of the
/// objective if the sign pattern is lost numerically.
pub fn solve_beta_opt(pa: CrossoverProb, pb: CrossoverProb) -> Result<TimeSharing> {
    let (a, b) = (pa.value(), pb.value());
    if a > b {
        return Err(Error::Ordering { p1: a, p2: b });
    }

    let deriv: Box<dyn Fn(f64) -> f64> = if a == b {
        Box::new(move |beta| degenerate_derivative(beta, a))
    } else {
        Box::new(move |beta| pf_objective_derivative_raw(beta, a, b))
    };

    let beta = match bisect_root(&deriv, BETA_LO, BETA_HI, BETA_XTOL) {
        Some(beta) => beta,
        None => {
            let objective = move |beta: f64| {
                let bp_a = convolve(beta, a);
                let bp_b = convolve(beta, b);
                (entropy(bp_a) - entropy(a)) * (1.0 - entropy(bp_b))
            };
            golden_max(objective, BETA_LO, BETA_HI, BETA_XTOL)
        }
    };

    if !(BETA_LO..=BETA_HI).contains(&beta) || deriv(beta).abs() > 1e-6 {
        return Err(Error::Convergence(format!(
            "beta = {beta}, residual = {} for reports ({a}, {b})",
            deriv(beta)
        )));
    }
    TimeSharing::new(beta)
}

/// Sort reports into (better, worse) roles. Returns the role parameters and
/// which user holds the better role.
fn assign_roles(reports: Announcements) -> (CrossoverProb, CrossoverProb, UserIndex) {
    if reports.p1.value() < reports.p2.value() {
        (reports.p1, reports.p2, UserIndex::One)
    } else {
        // strict reversal, or a tie: user 2 takes the better role
        (reports.p2, reports.p1, UserIndex::Two)
    }
}

fn better_rate(beta: f64, p: f64) -> f64 {
    entropy(convolve(beta, p)) - entropy(p)
}

fn worse_rate(beta: f64, p: f64) -> f64 {
    1.0 - entropy(convolve(beta, p))
}

/// Run one allocation: solve `beta_opt` on the sorted reports, assign roles,
/// and compute assigned (from reports) and realized (from true parameters)
/// rates, both indexed by user.
pub fn allocate(reports: Announcements, truths: TrueChannels) -> Result<AllocationResult> {
    let (pa, pb, better_user) = assign_roles(reports);
    let beta_opt = solve_beta_opt(pa, pb)?;
    let beta = beta_opt.value();

    let assigned_better = better_rate(beta, pa.value());
    let assigned_worse = worse_rate(beta, pb.value());

    let (assigned, realized) = match better_user {
        UserIndex::One => (
            RatePair::new(assigned_better, assigned_worse)?,
            RatePair::new(
                better_rate(beta, truths.p1.value()),
                worse_rate(beta, truths.p2.value()),
            )?,
        ),
        UserIndex::Two => (
            RatePair::new(assigned_worse, assigned_better)?,
            RatePair::new(
                worse_rate(beta, truths.p1.value()),
                better_rate(beta, truths.p2.value()),
            )?,
        ),
    };

    Ok(AllocationResult {
        beta_opt,
        better_user,
        assigned,
        realized,
    })
}

/// Pareto rates at the given `beta` for the sorted reports, mapped back to
/// user indexing.
pub fn assigned_rates(reports: Announcements, beta: TimeSharing) -> RatePair {
    let (pa, pb, better_user) = assign_roles(reports);
    let b = beta.value();
    let (rb, rw) = (better_rate(b, pa.value()), worse_rate(b, pb.value()));
    match better_user {
        UserIndex::One => RatePair { r1: rb, r2: rw },
        UserIndex::Two => RatePair { r1: rw, r2: rb },
    }
}
