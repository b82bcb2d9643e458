//! Divergences between a candidate's distributions and the measured ones.
//!
//! Scores are summed over the concatenated array, so a K-time score is the
//! sum of K per-time divergences. Lower is fitter; zero is an exact match.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ctqw::{ConcatenatedDistribution, Evolver, ProbeState, TimeGrid};
use crate::error::{Error, Result};
use crate::graph::CouplingString;

/// Floor applied to target probabilities inside the logarithm.
pub const TARGET_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FitnessScore(pub f64);

impl FitnessScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for FitnessScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Kld,
    Kolmogorov,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Kld => "kld",
            Metric::Kolmogorov => "kolmogorov",
        }
    }

    /// Applies the metric to two flat arrays of equal length.
    pub fn apply(self, model: &[f64], target: &[f64]) -> f64 {
        match self {
            Metric::Kld => kld_flat(model, target),
            Metric::Kolmogorov => kolmogorov_flat(model, target),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kld" => Ok(Metric::Kld),
            "kolmogorov" => Ok(Metric::Kolmogorov),
            other => Err(Error::Config(format!(
                "unknown metric {other:?}; expected kld or kolmogorov"
            ))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn kld_flat(model: &[f64], target: &[f64]) -> f64 {
    let sum: f64 = model
        .iter()
        .zip(target)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q.max(TARGET_FLOOR)).ln())
        .sum();
    // Gibbs' inequality holds per slice; anything below zero is roundoff.
    sum.max(0.0)
}

fn kolmogorov_flat(model: &[f64], target: &[f64]) -> f64 {
    0.5 * model.iter().zip(target).map(|(p, q)| (p - q).abs()).sum::<f64>()
}

fn check_shapes(model: &ConcatenatedDistribution, target: &ConcatenatedDistribution) -> Result<()> {
    if !model.same_shape(target) {
        return Err(Error::Shape(format!(
            "model has {} slices of {} sites, target has {} slices of {} sites",
            model.num_slices(),
            model.n(),
            target.num_slices(),
            target.n()
        )));
    }
    Ok(())
}

/// `Σ_x model_x ln(model_x / max(target_x, 1e-12))`, with `0 ln 0 = 0`.
pub fn kld(model: &ConcatenatedDistribution, target: &ConcatenatedDistribution) -> Result<FitnessScore> {
    check_shapes(model, target)?;
    Ok(FitnessScore(kld_flat(model.as_flat(), target.as_flat())))
}

/// Half the L1 distance over the concatenated array.
pub fn kolmogorov(model: &ConcatenatedDistribution, target: &ConcatenatedDistribution) -> Result<FitnessScore> {
    check_shapes(model, target)?;
    Ok(FitnessScore(kolmogorov_flat(model.as_flat(), target.as_flat())))
}

/// Everything needed to score a candidate: the measured distributions, the
/// probe they were produced with, and the times they were taken at.
#[derive(Debug, Clone)]
pub struct Objective {
    target: ConcatenatedDistribution,
    probe: ProbeState,
    grid: TimeGrid,
    metric: Metric,
}

impl Objective {
    pub fn new(target: ConcatenatedDistribution, probe: ProbeState, grid: TimeGrid, metric: Metric) -> Result<Self> {
        if probe.dim() != target.n() {
            return Err(Error::Shape(format!(
                "probe has {} sites but the target has {}",
                probe.dim(),
                target.n()
            )));
        }
        if grid.len() != target.num_slices() {
            return Err(Error::Shape(format!(
                "{} evolution times but the target has {} slices",
                grid.len(),
                target.num_slices()
            )));
        }
        Ok(Objective {
            target,
            probe,
            grid,
            metric,
        })
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    pub fn target(&self) -> &ConcatenatedDistribution {
        &self.target
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn score(&self, candidate: &CouplingString) -> Result<FitnessScore> {
        if candidate.n() != self.n() {
            return Err(Error::Shape(format!(
                "candidate has {} nodes, target has {}",
                candidate.n(),
                self.n()
            )));
        }
        let model = Evolver::new(candidate, &self.probe)?.concatenated(&self.grid);
        Ok(FitnessScore(self.metric.apply(model.as_flat(), self.target.as_flat())))
    }
}

/// Scores one candidate against a measured target.
pub fn fitness(
    candidate: &CouplingString,
    target: &ConcatenatedDistribution,
    probe: &ProbeState,
    grid: &TimeGrid,
    metric: Metric,
) -> Result<FitnessScore> {
    Objective::new(target.clone(), probe.clone(), grid.clone(), metric)?.score(candidate)
}
