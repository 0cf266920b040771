//! Side information about the opponent's announcement.
//!
//! User 1's announcement is modeled as a random variable `Y` on `(0, 0.5)`;
//! user 2 observes a finite discrete variable `Z` and picks a per-`z`
//! response maximizing its expected realized rate. Three regimes are
//! compared: `Z` pins `Y` down exactly (full information), `Z` is merely
//! correlated with `Y` (partial), and `Z` is independent of `Y` (none).
//! More information never hurts, and the expected-rate gain of conditioning
//! on `Z` over the best constant response is itself an information measure
//! that collapses to ordinary mutual information under log-density
//! utilities.
//!
//! User 1's true parameter is taken equal to its announcement `y`; user 2's
//! realized rate depends on `y` only through `beta_opt` and the role split,
//! so this convention does not distort the quantities computed here.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::Serialize;

use crate::allocator::{allocate, Announcements, TrueChannels};
use crate::bsc::CrossoverProb;
use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-9;
const Z_PROB_TOL: f64 = 1e-12;

/// A distribution of the opponent's announcement on `(0, 0.5)`: either a
/// finite set of atoms or a density sampled on a grid (trapezoidal
/// quadrature).
#[derive(Debug, Clone, PartialEq)]
pub enum AnnouncementPrior {
    Atoms { ys: Vec<f64>, weights: Vec<f64> },
    Grid { ys: Vec<f64>, density: Vec<f64> },
}

fn check_support(ys: &[f64]) -> Result<()> {
    if ys.is_empty() {
        return Err(Error::Validation("announcement support is empty".into()));
    }
    for &y in ys {
        CrossoverProb::new(y)?;
    }
    for w in ys.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Validation(format!(
                "announcement support not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

impl AnnouncementPrior {
    pub fn atoms(ys: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_support(&ys)?;
        if ys.len() != weights.len() {
            return Err(Error::Validation(
                "atom support and weight lengths differ".into(),
            ));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::Validation("atom weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Validation(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(Self::Atoms { ys, weights })
    }

    pub fn point_mass(y: f64) -> Result<Self> {
        Self::atoms(vec![y], vec![1.0])
    }

    pub fn grid(ys: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        check_support(&ys)?;
        if ys.len() != density.len() || ys.len() < 2 {
            return Err(Error::Validation(
                "grid density needs one value per grid point (at least two)".into(),
            ));
        }
        if density.iter().any(|&d| !d.is_finite() || d < 0.0) {
            return Err(Error::Validation("grid density must be nonnegative".into()));
        }
        let prior = Self::Grid { ys, density };
        let total = prior.integrate(|_| 1.0);
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Validation(format!(
                "grid density integrates to {total}, expected 1"
            )));
        }
        Ok(prior)
    }

    /// Uniform density on `[lo, hi]` sampled at `n` points.
    pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let ys: Vec<f64> = (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect();
        let density = vec![1.0 / (hi - lo); n];
        Self::grid(ys, density)
    }

    pub fn support(&self) -> &[f64] {
        match self {
            Self::Atoms { ys, .. } | Self::Grid { ys, .. } => ys,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, Self::Atoms { ys, .. } if ys.len() == 1)
    }

    /// Expectation of `f(Y)` under this distribution.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            Self::Atoms { ys, weights } => {
                ys.iter().zip(weights).map(|(&y, &w)| w * f(y)).sum()
            }
            Self::Grid { ys, density } => {
                let mut acc = 0.0;
                for k in 0..ys.len() - 1 {
                    let fu = density[k] * f(ys[k]);
                    let fv = density[k + 1] * f(ys[k + 1]);
                    acc += 0.5 * (fu + fv) * (ys[k + 1] - ys[k]);
                }
                acc
            }
        }
    }
}

/// A finite side-information variable `Z` with per-`z` conditional
/// announcement distributions, plus user 2's true channel parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoModel {
    z_prob: Vec<f64>,
    conditional: Vec<AnnouncementPrior>,
    truths: TrueChannels,
}

/// Expected rates in the three information regimes, and the utility-based
/// information measure `i_u = r2_partial - r2_none`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoReport {
    pub r2_full: f64,
    pub r2_partial: f64,
    pub r2_none: f64,
    pub i_u: f64,
}

/// Cached evaluation of user 2's realized rate `R_2(y, c)` when user 1
/// announces (and has) `y` and user 2 announces `c`.
struct RateTable {
    true_p2: CrossoverProb,
    cache: RefCell<HashMap<(u64, u64), f64>>,
}

impl RateTable {
    fn new(true_p2: CrossoverProb) -> Self {
        Self {
            true_p2,
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn rate(&self, y: f64, c: f64) -> f64 {
        let key = (y.to_bits(), c.to_bits());
        if let Some(&v) = self.cache.borrow().get(&key) {
            return v;
        }
        let y_p = CrossoverProb::new(y).expect("support validated at construction");
        let c_p = CrossoverProb::new(c).expect("candidates validated at construction");
        let result = allocate(
            Announcements { p1: y_p, p2: c_p },
            TrueChannels { p1: y_p, p2: self.true_p2 },
        )
        .expect("interior parameters cannot fail the solver");
        let v = result.realized.r2;
        self.cache.borrow_mut().insert(key, v);
        v
    }
}

fn check_candidates(candidates: &[f64]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::Validation("empty candidate-response grid".into()));
    }
    for &c in candidates {
        CrossoverProb::new(c)?;
    }
    Ok(())
}

impl SideInfoModel {
    pub fn new(
        z_prob: Vec<f64>,
        conditional: Vec<AnnouncementPrior>,
        truths: TrueChannels,
    ) -> Result<Self> {
        if z_prob.is_empty() || z_prob.len() != conditional.len() {
            return Err(Error::Validation(
                "need one conditional distribution per z outcome".into(),
            ));
        }
        if z_prob.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Validation("z probabilities must be nonnegative".into()));
        }
        let total: f64 = z_prob.iter().sum();
        if (total - 1.0).abs() > Z_PROB_TOL {
            return Err(Error::Validation(format!(
                "z probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            z_prob,
            conditional,
            truths,
        })
    }

    pub fn z_prob(&self) -> &[f64] {
        &self.z_prob
    }

    pub fn conditional(&self) -> &[AnnouncementPrior] {
        &self.conditional
    }

    pub fn truths(&self) -> TrueChannels {
        self.truths
    }

    /// The mixture `sum_z p(z) p(y|z)` as a single distribution. All
    /// conditionals must be of the same kind (atoms merge by support value;
    /// grids must share their support).
    pub fn marginal(&self) -> Result<AnnouncementPrior> {
        let all_atoms = self
            .conditional
            .iter()
            .all(|c| matches!(c, AnnouncementPrior::Atoms { .. }));
        if all_atoms {
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (pz, cond) in self.z_prob.iter().zip(&self.conditional) {
                if let AnnouncementPrior::Atoms { ys, weights } = cond {
                    for (&y, &w) in ys.iter().zip(weights) {
                        match merged.iter_mut().find(|(my, _)| *my == y) {
                            Some((_, mw)) => *mw += pz * w,
                            None => merged.push((y, pz * w)),
                        }
                    }
                }
            }
            merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let (ys, weights) = merged.into_iter().unzip();
            return AnnouncementPrior::atoms(ys, weights);
        }

        let first_support = self.conditional[0].support().to_vec();
        let mut density = vec![0.0; first_support.len()];
        for (pz, cond) in self.z_prob.iter().zip(&self.conditional) {
            match cond {
                AnnouncementPrior::Grid { ys, density: d } if *ys == first_support => {
                    for (acc, &v) in density.iter_mut().zip(d) {
                        *acc += pz * v;
                    }
                }
                _ => {
                    return Err(Error::Validation(
                        "marginal needs conditionals of one kind on a shared support".into(),
                    ))
                }
            }
        }
        AnnouncementPrior::grid(first_support, density)
    }

    /// Expected realized rate of user 2 under a per-`z` response.
    pub fn expected_rate(&self, response: &[CrossoverProb]) -> Result<f64> {
        if response.len() != self.z_prob.len() {
            return Err(Error::Validation(format!(
                "response has {} entries for {} z outcomes",
                response.len(),
                self.z_prob.len()
            )));
        }
        let table = RateTable::new(self.truths.p2);
        Ok(self.expected_rate_with(&table, response))
    }

    fn expected_rate_with(&self, table: &RateTable, response: &[CrossoverProb]) -> f64 {
        self.z_prob
            .iter()
            .zip(&self.conditional)
            .zip(response)
            .map(|((&pz, cond), &resp)| pz * cond.integrate(|y| table.rate(y, resp.value())))
            .sum()
    }

    /// Per-`z` response maximizing the conditional expected rate over the
    /// candidate grid; the smallest candidate wins ties.
    pub fn optimal_response(&self, candidates: &[f64]) -> Result<Vec<CrossoverProb>> {
        check_candidates(candidates)?;
        let table = RateTable::new(self.truths.p2);
        Ok(self.optimal_response_with(&table, candidates))
    }

    fn optimal_response_with(&self, table: &RateTable, candidates: &[f64]) -> Vec<CrossoverProb> {
        self.conditional
            .iter()
            .map(|cond| {
                let mut best_c = candidates[0];
                let mut best_v = f64::NEG_INFINITY;
                for &c in candidates {
                    let v = cond.integrate(|y| table.rate(y, c));
                    if v > best_v {
                        best_v = v;
                        best_c = c;
                    }
                }
                CrossoverProb::new(best_c).expect("candidates checked")
            })
            .collect()
    }

    /// Best constant (z-independent) response against the marginal, with its
    /// expected rate.
    pub fn no_info_response(&self, candidates: &[f64]) -> Result<(CrossoverProb, f64)> {
        check_candidates(candidates)?;
        let table = RateTable::new(self.truths.p2);
        Ok(self.no_info_response_with(&table, candidates)?)
    }

    fn no_info_response_with(
        &self,
        table: &RateTable,
        candidates: &[f64],
    ) -> Result<(CrossoverProb, f64)> {
        let marginal = self.marginal()?;
        let mut best_c = candidates[0];
        let mut best_v = f64::NEG_INFINITY;
        for &c in candidates {
            let v = marginal.integrate(|y| table.rate(y, c));
            if v > best_v {
                best_v = v;
                best_c = c;
            }
        }
        Ok((CrossoverProb::new(best_c).expect("candidates checked"), best_v))
    }

    /// Expected rate when `Z` pins down `Y` exactly. Requires every
    /// conditional to be a point mass; each announcement is answered by the
    /// best candidate (the grid stand-in for "announce y plus epsilon").
    pub fn expected_rate_full_info(&self, candidates: &[f64]) -> Result<f64> {
        if !self.conditional.iter().all(|c| c.is_point_mass()) {
            return Err(Error::Validation(
                "full-information evaluation needs point-mass conditionals".into(),
            ));
        }
        check_candidates(candidates)?;
        let table = RateTable::new(self.truths.p2);
        self.full_info_with(&table, candidates)
    }

    fn full_info_with(&self, table: &RateTable, candidates: &[f64]) -> Result<f64> {
        // the degenerate refinement: every announcement value is answered
        // with its own pointwise-best candidate
        let marginal = self.marginal()?;
        Ok(marginal.integrate(|y| {
            candidates
                .iter()
                .map(|&c| table.rate(y, c))
                .fold(f64::NEG_INFINITY, f64::max)
        }))
    }

    /// Expected rate of the best constant response (the no-information
    /// regime).
    pub fn expected_rate_no_info(&self, candidates: &[f64]) -> Result<f64> {
        Ok(self.no_info_response(candidates)?.1)
    }

    /// Expected rates of the three information regimes for this model:
    /// its degenerate refinement (full), the model as given (partial), and
    /// its marginal (none).
    pub fn info_case_ordering(&self, candidates: &[f64]) -> Result<InfoReport> {
        check_candidates(candidates)?;
        let table = RateTable::new(self.truths.p2);
        let r2_full = self.full_info_with(&table, candidates)?;
        let response = self.optimal_response_with(&table, candidates);
        let r2_partial = self.expected_rate_with(&table, &response);
        let (_, r2_none) = self.no_info_response_with(&table, candidates)?;
        Ok(InfoReport {
            r2_full,
            r2_partial,
            r2_none,
            i_u: r2_partial - r2_none,
        })
    }

    /// The utility-based information measure: the expected gain of the
    /// per-`z` optimal responses over the best constant response, evaluated
    /// as a double expectation.
    pub fn utility_information(&self, candidates: &[f64]) -> Result<f64> {
        check_candidates(candidates)?;
        let table = RateTable::new(self.truths.p2);
        let response = self.optimal_response_with(&table, candidates);
        let (constant, _) = self.no_info_response_with(&table, candidates)?;
        Ok(self
            .z_prob
            .iter()
            .zip(&self.conditional)
            .zip(&response)
            .map(|((&pz, cond), &resp)| {
                pz * cond.integrate(|y| table.rate(y, resp.value()) - table.rate(y, constant.value()))
            })
            .sum())
    }
}

/// A finite joint distribution of `(Y, Z)`; rows index `y`, columns `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    probs: Vec<Vec<f64>>,
}

impl DiscreteJoint {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.is_empty() || probs[0].is_empty() {
            return Err(Error::Validation("empty joint distribution".into()));
        }
        let cols = probs[0].len();
        let mut total = 0.0;
        for row in &probs {
            if row.len() != cols {
                return Err(Error::Validation("ragged joint distribution".into()));
            }
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::Validation(
                        "joint probabilities must be nonnegative".into(),
                    ));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Validation(format!(
                "joint probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }
}

/// Evaluate the utility-based measure with log-density utilities next to the
/// standard mutual information of the joint, returning `(log_utility, mi)`.
/// The two agree: plugging `log p(y|z)` and `log p(y)` into the utility
/// functional reproduces `I(Y; Z)` in bits.
pub fn mutual_information_check(joint: &DiscreteJoint) -> Result<(f64, f64)> {
    let probs = &joint.probs;
    let py: Vec<f64> = probs.iter().map(|row| row.iter().sum()).collect();
    let cols = probs[0].len();
    let pz: Vec<f64> = (0..cols).map(|j| probs.iter().map(|row| row[j]).sum()).collect();

    // Eq-form: sum_z p(z) sum_y p(y|z) [log p(y|z) - log p(y)]
    let mut log_utility = 0.0;
    for (j, &pzj) in pz.iter().enumerate() {
        if pzj == 0.0 {
            continue;
        }
        for (i, row) in probs.iter().enumerate() {
            let p_yz = row[j] / pzj; // conditional p(y|z)
            if p_yz == 0.0 {
                continue;
            }
            if py[i] == 0.0 {
                return Err(Error::Domain(
                    "conditioning on a zero-probability announcement".into(),
                ));
            }
            log_utility += pzj * p_yz * (p_yz.log2() - py[i].log2());
        }
    }

    // direct mutual information of the joint
    let mut mi = 0.0;
    for (i, row) in probs.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (py[i] * pz[j])).log2();
            }
        }
    }
    Ok((log_utility, mi))
}
