//! TOML scenario files for the CLI.
//!
//! A scenario bundles the parameters of an allocation/equilibrium check
//! and, optionally, a side-information model. Missing fields fall back to
//! the module defaults; every numeric invariant is validated on load with
//! an error naming what was violated.

use serde::Deserialize;

use crate::allocator::{Announcements, TrueChannels};
use crate::bsc::CrossoverProb;
use crate::error::{Error, Result};
use crate::side_info::{AnnouncementPrior, SideInfoModel};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_GRID_SIZE: usize = 1000;
pub const DEFAULT_GRID_MIN: f64 = 0.001;
pub const DEFAULT_GRID_MAX: f64 = 0.499;
pub const DEFAULT_CANDIDATE_GRID: usize = 1025;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    p1: f64,
    p2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    theta: f64,
    grid_size: Option<usize>,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSideInfo {
    kind: String,
    p2_true: f64,
    z_prob: Option<Vec<f64>>,
    /// `point_mass`: announcement pinned down by each z outcome.
    z_to_y: Option<Vec<f64>>,
    /// `mixture` / `independent`: the announcement support.
    y_support: Option<Vec<f64>>,
    /// `mixture`: rows are per-z conditional weights over `y_support`.
    table: Option<Vec<Vec<f64>>>,
    /// `independent`: a single weight vector over `y_support`.
    y_weights: Option<Vec<f64>>,
    candidate_grid: Option<usize>,
    candidate_eps: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    truths: Option<RawPair>,
    reports: Option<RawPair>,
    epsilon: Option<f64>,
    sweep: Option<RawSweep>,
    side_info: Option<RawSideInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub theta: f64,
    pub grid_size: usize,
    pub grid_min: f64,
    pub grid_max: f64,
}

#[derive(Debug, Clone)]
pub struct SideInfoConfig {
    pub model: SideInfoModel,
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub truths: Option<TrueChannels>,
    pub reports: Option<Announcements>,
    pub epsilon: f64,
    pub sweep: Option<SweepConfig>,
    pub side_info: Option<SideInfoConfig>,
}

fn crossover(field: &str, v: f64) -> Result<CrossoverProb> {
    CrossoverProb::new(v)
        .map_err(|_| Error::Validation(format!("{field} = {v}: crossover out of (0, 0.5)")))
}

fn pair_to_truths(raw: &RawPair) -> Result<TrueChannels> {
    Ok(TrueChannels {
        p1: crossover("truths.p1", raw.p1)?,
        p2: crossover("truths.p2", raw.p2)?,
    })
}

fn pair_to_reports(raw: &RawPair) -> Result<Announcements> {
    Ok(Announcements {
        p1: crossover("reports.p1", raw.p1)?,
        p2: crossover("reports.p2", raw.p2)?,
    })
}

fn build_side_info(raw: &RawSideInfo) -> Result<SideInfoConfig> {
    let p2_true = crossover("side_info.p2_true", raw.p2_true)?;
    let require = |name: &str, opt: bool| -> Result<()> {
        if opt {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "side_info.kind = \"{}\" requires side_info.{name}",
                raw.kind
            )))
        }
    };

    let (z_prob, conditional, atoms): (Vec<f64>, Vec<AnnouncementPrior>, Vec<f64>) =
        match raw.kind.as_str() {
            "point_mass" => {
                require("z_prob", raw.z_prob.is_some())?;
                require("z_to_y", raw.z_to_y.is_some())?;
                let z_prob = raw.z_prob.clone().unwrap();
                let ys = raw.z_to_y.clone().unwrap();
                if ys.len() != z_prob.len() {
                    return Err(Error::Validation(
                        "side_info.z_to_y must have one announcement per z outcome".into(),
                    ));
                }
                let conditional = ys
                    .iter()
                    .map(|&y| AnnouncementPrior::point_mass(y))
                    .collect::<Result<Vec<_>>>()?;
                (z_prob, conditional, ys)
            }
            "mixture" => {
                require("z_prob", raw.z_prob.is_some())?;
                require("y_support", raw.y_support.is_some())?;
                require("table", raw.table.is_some())?;
                let z_prob = raw.z_prob.clone().unwrap();
                let ys = raw.y_support.clone().unwrap();
                let table = raw.table.clone().unwrap();
                if table.len() != z_prob.len() {
                    return Err(Error::Validation(
                        "side_info.table needs one row per z outcome".into(),
                    ));
                }
                let conditional = table
                    .iter()
                    .map(|row| AnnouncementPrior::atoms(ys.clone(), row.clone()))
                    .collect::<Result<Vec<_>>>()?;
                (z_prob, conditional, ys)
            }
            "independent" => {
                require("y_support", raw.y_support.is_some())?;
                require("y_weights", raw.y_weights.is_some())?;
                let ys = raw.y_support.clone().unwrap();
                let prior = AnnouncementPrior::atoms(ys.clone(), raw.y_weights.clone().unwrap())?;
                let z_prob = raw.z_prob.clone().unwrap_or_else(|| vec![0.5, 0.5]);
                let conditional = vec![prior; z_prob.len()];
                (z_prob, conditional, ys)
            }
            other => {
                return Err(Error::Validation(format!(
                    "side_info.kind = \"{other}\" is not one of point_mass, mixture, independent"
                )))
            }
        };

    // p1 true is tied to the announcement, so its slot in TrueChannels is a
    // placeholder that the rate table overrides per announcement value
    let model = SideInfoModel::new(
        z_prob,
        conditional,
        TrueChannels {
            p1: crossover("side_info.y_support[0]", atoms[0])?,
            p2: p2_true,
        },
    )?;

    let n = raw.candidate_grid.unwrap_or(DEFAULT_CANDIDATE_GRID);
    if n < 2 {
        return Err(Error::Validation(
            "side_info.candidate_grid must be at least 2".into(),
        ));
    }
    let eps = raw.candidate_eps.unwrap_or(DEFAULT_EPSILON);
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Validation(format!(
            "side_info.candidate_eps = {eps} must lie in (0, 0.5)"
        )));
    }
    let mut candidates: Vec<f64> = (0..n)
        .map(|k| DEFAULT_GRID_MIN + (DEFAULT_GRID_MAX - DEFAULT_GRID_MIN) * k as f64 / (n - 1) as f64)
        .collect();
    candidates.extend(atoms.iter().map(|&y| y + eps).filter(|&v| v < 0.5));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    Ok(SideInfoConfig { model, candidates })
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| Error::Parse(format!("scenario file: {e}")))?;

        let epsilon = raw.epsilon.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Validation(format!(
                "epsilon = {epsilon} must lie in (0, 0.5)"
            )));
        }

        let sweep = match &raw.sweep {
            None => None,
            Some(s) => {
                let grid_min = s.grid_min.unwrap_or(DEFAULT_GRID_MIN);
                let grid_max = s.grid_max.unwrap_or(DEFAULT_GRID_MAX);
                crossover("sweep.grid_min", grid_min)?;
                crossover("sweep.grid_max", grid_max)?;
                if grid_min >= grid_max {
                    return Err(Error::Validation(format!(
                        "sweep grid bounds out of order: [{grid_min}, {grid_max}]"
                    )));
                }
                let grid_size = s.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
                if grid_size < 2 {
                    return Err(Error::Validation(
                        "sweep.grid_size must be at least 2".into(),
                    ));
                }
                crossover("sweep.theta", s.theta)?;
                Some(SweepConfig {
                    theta: s.theta,
                    grid_size,
                    grid_min,
                    grid_max,
                })
            }
        };

        Ok(Self {
            truths: raw.truths.as_ref().map(pair_to_truths).transpose()?,
            reports: raw.reports.as_ref().map(pair_to_reports).transpose()?,
            epsilon,
            sweep,
            side_info: raw.side_info.as_ref().map(build_side_info).transpose()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scenario_parses() {
        let text = r#"
            epsilon = 1e-6

            [truths]
            p1 = 0.1
            p2 = 0.2

            [reports]
            p1 = 0.1
            p2 = 0.2

            [sweep]
            theta = 0.1

            [side_info]
            kind = "mixture"
            p2_true = 0.35
            z_prob = [0.5, 0.5]
            y_support = [0.1, 0.3]
            table = [[0.8, 0.2], [0.2, 0.8]]
        "#;
        let s = Scenario::from_toml(text).unwrap();
        assert_eq!(s.truths.unwrap().p1.value(), 0.1);
        let sweep = s.sweep.unwrap();
        assert_eq!(sweep.grid_size, DEFAULT_GRID_SIZE);
        assert_eq!(sweep.grid_min, DEFAULT_GRID_MIN);
        let si = s.side_info.unwrap();
        assert_eq!(si.model.z_prob(), &[0.5, 0.5]);
        assert!(si.candidates.contains(&(0.1 + 1e-6)));
        assert!(si.candidates.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invariants_are_named_in_errors() {
        let err = Scenario::from_toml("[truths]\np1 = 0.6\np2 = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("truths.p1"), "{err}");

        let err = Scenario::from_toml("epsilon = -1.0").unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");

        let err = Scenario::from_toml(
            "[side_info]\nkind = \"mixture\"\np2_true = 0.35\nz_prob = [0.6, 0.5]\ny_support = [0.1, 0.3]\ntable = [[1.0, 0.0], [0.0, 1.0]]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("z probabilities sum"), "{err}");

        let err = Scenario::from_toml("[sweep]\ntheta = 0.1\ngrid_min = 0.4\ngrid_max = 0.2\n")
            .unwrap_err();
        assert!(err.to_string().contains("out of order"), "{err}");

        let err = Scenario::from_toml("[side_info]\nkind = \"bogus\"\np2_true = 0.35\n")
            .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(Scenario::from_toml("[truths]\np1 = 0.1\np2 = 0.2\np3 = 0.3\n").is_err());
        assert!(Scenario::from_toml("nonsense = 1\n").is_err());
    }

    #[test]
    fn point_mass_and_independent_kinds() {
        let s = Scenario::from_toml(
            "[side_info]\nkind = \"point_mass\"\np2_true = 0.35\nz_prob = [0.5, 0.5]\nz_to_y = [0.1, 0.3]\n",
        )
        .unwrap();
        let model = s.side_info.unwrap().model;
        assert!(model.conditional().iter().all(|c| c.is_point_mass()));

        let s = Scenario::from_toml(
            "[side_info]\nkind = \"independent\"\np2_true = 0.35\ny_support = [0.1, 0.3]\ny_weights = [0.5, 0.5]\n",
        )
        .unwrap();
        let model = s.side_info.unwrap().model;
        assert_eq!(model.conditional()[0], model.conditional()[1]);
    }
}
