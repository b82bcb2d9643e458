//! Finite-resource measurements and the threshold study.
//!
//! A measured slice is simulated by drawing a Poisson count with mean
//! `N_r · p_x` for every site and normalising by the total count. Noisy
//! targets no longer admit a zero score, so runs halt on a threshold `T`
//! and each run lands in one of four outcome classes.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctqw::{ConcatenatedDistribution, ProbeState, TimeGrid};
use crate::error::{Error, Result};
use crate::fitness::Objective;
use crate::ga::{run_traced, GaConfig, HaltReason, RunResult};
use crate::graph::CouplingString;
use crate::seed::{derive_seed, rng_from_seed};

const NOISE_STREAM: u64 = 0x006e_6f69_7365;
const SEARCH_STREAM: u64 = 0x7365_6172_6368;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Expected number of detections per time slice.
    pub resources: u64,
    pub thresholds: Vec<f64>,
    pub mc_runs: usize,
    /// Searches run against each noisy sample.
    pub inner_runs: usize,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resources == 0 {
            return Err(Error::Config("resources must be at least 1".into()));
        }
        if self.thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config(format!(
                "thresholds must be positive: {:?}",
                self.thresholds
            )));
        }
        if self.thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "thresholds must be strictly increasing: {:?}",
                self.thresholds
            )));
        }
        Ok(())
    }
}

/// `count` values spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Twelve thresholds from `4e-4` to `0.2`.
pub fn default_thresholds() -> Vec<f64> {
    log_spaced(4e-4, 0.2, 12)
}

/// Poisson-sampled estimate of `truth` with `resources` expected counts per
/// slice. A slice that collects no counts at all is replaced by the uniform
/// distribution.
pub fn sample_noisy_distribution<R: Rng + ?Sized>(
    truth: &ConcatenatedDistribution,
    resources: u64,
    rng: &mut R,
) -> ConcatenatedDistribution {
    let n = truth.n();
    let mut values = Vec::with_capacity(truth.as_flat().len());
    for slice in truth.slices() {
        let counts: Vec<f64> = slice
            .iter()
            .map(|&p| {
                let mean = resources as f64 * p;
                if mean > 0.0 {
                    Poisson::new(mean).expect("positive finite mean").sample(rng)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = counts.iter().sum();
        if total > 0.0 {
            values.extend(counts.iter().map(|c| c / total));
        } else {
            values.extend(std::iter::repeat_n(1.0 / n as f64, n));
        }
    }
    ConcatenatedDistribution::from_flat_unchecked(n, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    TrueNegative,
    FalseNegative,
}

/// A run that reaches the threshold is a positive, one that runs out of
/// generations a negative; it is "true" when the returned couplings are
/// correct for positives and incorrect for negatives.
pub fn classify_outcome(result: &RunResult, truth: &CouplingString) -> Outcome {
    let exact = &result.best_chromosome == truth;
    match (result.halted_by, exact) {
        (HaltReason::Threshold | HaltReason::ZeroFitness, true) => Outcome::TruePositive,
        (HaltReason::Threshold | HaltReason::ZeroFitness, false) => Outcome::FalsePositive,
        (HaltReason::MaxGenerations, true) => Outcome::FalseNegative,
        (HaltReason::MaxGenerations, false) => Outcome::TrueNegative,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTally {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
    pub total: usize,
}

impl OutcomeTally {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TruePositive => self.true_positive += 1,
            Outcome::FalsePositive => self.false_positive += 1,
            Outcome::TrueNegative => self.true_negative += 1,
            Outcome::FalseNegative => self.false_negative += 1,
        }
        self.total += 1;
    }

    pub fn merge(&mut self, other: &OutcomeTally) {
        self.true_positive += other.true_positive;
        self.false_positive += other.false_positive;
        self.true_negative += other.true_negative;
        self.false_negative += other.false_negative;
        self.total += other.total;
    }

    pub fn is_consistent(&self) -> bool {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative == self.total
    }

    fn rate(&self, count: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            count as f64 / self.total as f64
        }
    }

    pub fn tp_rate(&self) -> f64 {
        self.rate(self.true_positive)
    }

    pub fn fp_rate(&self) -> f64 {
        self.rate(self.false_positive)
    }

    pub fn tn_rate(&self) -> f64 {
        self.rate(self.true_negative)
    }

    pub fn fn_rate(&self) -> f64 {
        self.rate(self.false_negative)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTally {
    pub threshold: f64,
    pub tally: OutcomeTally,
}

/// Tallies for one resource level, one row per threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub resources: u64,
    pub rows: Vec<ThresholdTally>,
}

/// Noisy sample `run` of a sweep and the seed of inner search `inner`.
pub fn sweep_seeds(master: u64, run: usize, inner: usize) -> (u64, u64) {
    (
        derive_seed(master, &[NOISE_STREAM, run as u64]),
        derive_seed(master, &[SEARCH_STREAM, run as u64, inner as u64]),
    )
}

/// Runs the threshold study for one network and resource level.
///
/// Each Monte-Carlo run draws one noisy target, shared by its `inner_runs`
/// searches and by every threshold. A search's trajectory does not depend on
/// the threshold until it halts, so each search runs once without a threshold
/// and is replayed against every `T`. Seeds come from `noise.seed`; the
/// `seed` and `threshold` fields of `ga` are ignored.
pub fn monte_carlo_sweep(
    truth: &CouplingString,
    probe: &ProbeState,
    grid: &TimeGrid,
    ga: &GaConfig,
    noise: &NoiseConfig,
) -> Result<SweepResult> {
    noise.validate()?;
    ga.validate()?;
    let clean = crate::ctqw::concatenated_distribution(truth, probe, grid)?;

    let per_run: Vec<Vec<OutcomeTally>> = (0..noise.mc_runs)
        .into_par_iter()
        .map(|run| -> Result<Vec<OutcomeTally>> {
            let (noise_seed, _) = sweep_seeds(noise.seed, run, 0);
            let target = sample_noisy_distribution(&clean, noise.resources, &mut rng_from_seed(noise_seed));
            let objective = Objective::new(target, probe.clone(), grid.clone(), ga.metric)?;
            let mut tallies = vec![OutcomeTally::default(); noise.thresholds.len()];
            for inner in 0..noise.inner_runs {
                let config = GaConfig {
                    seed: sweep_seeds(noise.seed, run, inner).1,
                    threshold: None,
                    ..ga.clone()
                };
                let trace = run_traced(&objective, &config)?;
                for (tally, &t) in tallies.iter_mut().zip(&noise.thresholds) {
                    tally.record(classify_outcome(&trace.halt_at_threshold(t), truth));
                }
            }
            Ok(tallies)
        })
        .collect::<Result<_>>()?;

    let rows = noise
        .thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let mut tally = OutcomeTally::default();
            for run in &per_run {
                tally.merge(&run[i]);
            }
            ThresholdTally { threshold, tally }
        })
        .collect();
    Ok(SweepResult {
        resources: noise.resources,
        rows,
    })
}
