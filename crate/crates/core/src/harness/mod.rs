//! Benchmark protocols: repeated noiseless reconstructions per network size,
//! and the Monte-Carlo threshold study under shot noise.
//!
//! Run `r` of topology `T` at size `n` uses
//! `seed::derive_seed(master, [fnv1a(label(T)), n, r])`, so results do not
//! depend on the order in which runs execute.

mod report;
mod target;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctqw::{concatenated_distribution, ProbeState, TimeGrid};
use crate::error::{Error, Result};
use crate::fitness::{Metric, Objective};
use crate::ga::{run_traced, GaConfig};
use crate::graph::{num_couplings, Topology};
use crate::measurement::{default_thresholds, monte_carlo_sweep, NoiseConfig};
use crate::seed::{derive_seed, fnv1a};

pub(crate) use report::write_json;
pub use report::{
    emit_benchmark, emit_sweep, write_benchmark_csv, write_sweep_csv, BenchmarkEntry, BenchmarkReport, OutputFormat,
    RunRecord, SweepEntry, SweepReport, SweepRow,
};
pub use target::TargetFile;

/// How the initial walker state is chosen for a network of `n` nodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeSpec {
    /// Amplitudes proportional to `1..=n`.
    #[default]
    Ramp,
    Uniform,
    Site(usize),
    /// Explicit real amplitudes, normalised on use.
    Amplitudes(Vec<f64>),
}

impl ProbeSpec {
    pub fn build(&self, n: usize) -> Result<ProbeState> {
        match self {
            ProbeSpec::Ramp => Ok(ProbeState::ramp(n)),
            ProbeSpec::Uniform => Ok(ProbeState::uniform(n)),
            ProbeSpec::Site(x) => ProbeState::localized(n, *x),
            ProbeSpec::Amplitudes(a) => {
                if a.len() != n {
                    return Err(Error::Config(format!(
                        "probe has {} amplitudes, network has {n} nodes",
                        a.len()
                    )));
                }
                ProbeState::from_real(a)
            }
        }
    }
}

impl FromStr for ProbeSpec {
    type Err = Error;

    /// `ramp`, `uniform`, `site:<i>` or a comma-separated amplitude list.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp" => Ok(ProbeSpec::Ramp),
            "uniform" => Ok(ProbeSpec::Uniform),
            _ => {
                if let Some(site) = s.strip_prefix("site:") {
                    return site
                        .parse()
                        .map(ProbeSpec::Site)
                        .map_err(|_| Error::Config(format!("bad probe site {site:?}")));
                }
                parse_list(s).map(ProbeSpec::Amplitudes).map_err(|_| {
                    Error::Config(format!(
                        "unknown probe {s:?}; expected ramp, uniform, site:<i> or amplitudes"
                    ))
                })
            }
        }
    }
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeSpec::Ramp => f.write_str("ramp"),
            ProbeSpec::Uniform => f.write_str("uniform"),
            ProbeSpec::Site(x) => write!(f, "site:{x}"),
            ProbeSpec::Amplitudes(a) => {
                let parts: Vec<String> = a.iter().map(f64::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Comma-separated numbers.
pub fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
    s.split(',').map(|p| p.trim().parse()).collect()
}

/// GA settings left unset fall back to the reference values for each size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaOverrides {
    pub np: Option<usize>,
    pub pe: Option<f64>,
    pub k: Option<usize>,
    pub pc: Option<f64>,
    pub pm: Option<f64>,
    pub ng: Option<usize>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub metric: Option<Metric>,
}

impl GaOverrides {
    /// Fields set in `other` win.
    pub fn merged(&self, other: &GaOverrides) -> GaOverrides {
        GaOverrides {
            np: other.np.or(self.np),
            pe: other.pe.or(self.pe),
            k: other.k.or(self.k),
            pc: other.pc.or(self.pc),
            pm: other.pm.or(self.pm),
            ng: other.ng.or(self.ng),
            threshold: other.threshold.or(self.threshold),
            seed: other.seed.or(self.seed),
            metric: other.metric.or(self.metric),
        }
    }

    pub fn resolve(&self, n: usize) -> Result<GaConfig> {
        let d = GaConfig::for_genome_length(num_couplings(n));
        let config = GaConfig {
            population_size: self.np.unwrap_or(d.population_size),
            elite_fraction: self.pe.unwrap_or(d.elite_fraction),
            tournament_size: self.k.unwrap_or(d.tournament_size),
            crossover_prob: self.pc.unwrap_or(d.crossover_prob),
            mutation_prob: self.pm.unwrap_or(d.mutation_prob),
            max_generations: self.ng.unwrap_or(d.max_generations),
            threshold: self.threshold,
            seed: self.seed.unwrap_or(d.seed),
            metric: self.metric.unwrap_or(d.metric),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Settings of the noisy protocol; one sweep per resource level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub resources: Vec<u64>,
    pub thresholds: Vec<f64>,
    pub mc_runs: usize,
    pub inner_runs: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            resources: vec![500, 5000],
            thresholds: default_thresholds(),
            mc_runs: 100,
            inner_runs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub topology: Topology,
    pub n_values: Vec<usize>,
    pub times: TimeGrid,
    pub probe: ProbeSpec,
    /// Independent repetitions per size (noiseless protocol).
    pub runs: usize,
    pub ga: GaOverrides,
    pub seed: u64,
    pub noise: Option<NoiseSpec>,
}

impl ExperimentSpec {
    /// Reference protocol: times 0.5 and 0.6, ramp probe, 100 runs.
    pub fn new(topology: Topology, n_values: Vec<usize>) -> Self {
        ExperimentSpec {
            topology,
            n_values,
            times: TimeGrid::new(vec![0.5, 0.6]).expect("valid grid"),
            probe: ProbeSpec::Ramp,
            runs: 100,
            ga: GaOverrides::default(),
            seed: 0,
            noise: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::Config("no network sizes given".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("network size must be at least 2, got {n}")));
        }
        for &n in &self.n_values {
            self.topology.build(n)?;
            self.probe.build(n)?;
            self.ga.resolve(n)?;
        }
        Ok(())
    }

    pub fn run_seed(&self, n: usize, run: usize) -> u64 {
        derive_seed(self.seed, &[fnv1a(&self.topology.label()), n as u64, run as u64])
    }
}

/// Repeats the reconstruction `spec.runs` times per size against noiseless
/// targets. A run succeeds when it returns exactly the true couplings.
pub fn benchmark_noiseless(spec: &ExperimentSpec) -> Result<BenchmarkReport> {
    if spec.noise.is_some() {
        return Err(Error::Config("noiseless benchmark given a noise configuration".into()));
    }
    if spec.runs < 1 {
        return Err(Error::Config("at least one run is required".into()));
    }
    spec.validate()?;

    let mut entries = Vec::with_capacity(spec.n_values.len());
    for &n in &spec.n_values {
        let truth = spec.topology.build(n)?;
        let probe = spec.probe.build(n)?;
        let ga = spec.ga.resolve(n)?;
        let target = concatenated_distribution(&truth, &probe, &spec.times)?;
        let objective = Objective::new(target, probe, spec.times.clone(), ga.metric)?;

        let runs: Vec<RunRecord> = (0..spec.runs)
            .into_par_iter()
            .map(|run| {
                let seed = spec.run_seed(n, run);
                let config = GaConfig { seed, ..ga.clone() };
                let result = run_traced(&objective, &config)?.result;
                Ok(RunRecord::new(run, seed, &result, &truth))
            })
            .collect::<Result<_>>()?;
        entries.push(BenchmarkEntry::new(spec.topology.label(), n, &truth, ga, runs));
    }
    Ok(BenchmarkReport {
        spec: spec.clone(),
        entries,
    })
}

/// The threshold study for every size and resource level in `spec.noise`.
pub fn benchmark_noisy(spec: &ExperimentSpec) -> Result<SweepReport> {
    let noise = spec
        .noise
        .as_ref()
        .ok_or_else(|| Error::Config("noisy benchmark needs a noise configuration".into()))?;
    spec.validate()?;
    if noise.resources.is_empty() {
        return Err(Error::Config("no resource levels given".into()));
    }

    let mut entries = Vec::new();
    if noise.mc_runs == 0 {
        return Ok(SweepReport {
            spec: spec.clone(),
            entries,
        });
    }
    for &n in &spec.n_values {
        let truth = spec.topology.build(n)?;
        let probe = spec.probe.build(n)?;
        let ga = spec.ga.resolve(n)?;
        for &resources in &noise.resources {
            let config = NoiseConfig {
                resources,
                thresholds: noise.thresholds.clone(),
                mc_runs: noise.mc_runs,
                inner_runs: noise.inner_runs,
                seed: derive_seed(spec.seed, &[fnv1a(&spec.topology.label()), n as u64, resources]),
            };
            let sweep = monte_carlo_sweep(&truth, &probe, &spec.times, &ga, &config)?;
            entries.push(SweepEntry::new(
                spec.topology.label(),
                n,
                ga.clone(),
                config.seed,
                sweep,
            ));
        }
    }
    Ok(SweepReport {
        spec: spec.clone(),
        entries,
    })
}
