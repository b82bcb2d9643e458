use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentSpec;
use crate::error::{Error, Result};
use crate::ga::{GaConfig, HaltReason, RunResult};
use crate::graph::CouplingString;
use crate::measurement::SweepResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?}; expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub halted_by: HaltReason,
    pub generations: usize,
    pub evaluations: usize,
    pub best_score: f64,
    pub chromosome: String,
}

impl RunRecord {
    pub fn new(run: usize, seed: u64, result: &RunResult, truth: &CouplingString) -> Self {
        RunRecord {
            run,
            seed,
            success: &result.best_chromosome == truth,
            halted_by: result.halted_by,
            generations: result.generations_used,
            evaluations: result.evaluations,
            best_score: result.best_score.value(),
            chromosome: result.best_chromosome.to_string(),
        }
    }
}

/// All runs for one topology and size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub topology: String,
    pub n: usize,
    pub truth: String,
    /// Resolved settings; each run replaces `seed` with its own.
    pub ga: GaConfig,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful runs only; absent when none succeeded.
    pub mean_generations: Option<f64>,
    pub std_generations: Option<f64>,
    pub max_evaluations: usize,
    pub runs: Vec<RunRecord>,
    /// Run × gene matrix of retrieved couplings.
    pub raster: Vec<Vec<u8>>,
}

impl BenchmarkEntry {
    pub fn new(topology: String, n: usize, truth: &CouplingString, ga: GaConfig, runs: Vec<RunRecord>) -> Self {
        let gens: Vec<f64> = runs
            .iter()
            .filter(|r| r.success)
            .map(|r| r.generations as f64)
            .collect();
        let (mean, std) = if gens.is_empty() {
            (None, None)
        } else {
            let m = gens.iter().sum::<f64>() / gens.len() as f64;
            let var = gens.iter().map(|g| (g - m).powi(2)).sum::<f64>() / gens.len() as f64;
            (Some(m), Some(var.sqrt()))
        };
        let raster = runs
            .iter()
            .map(|r| r.chromosome.bytes().map(|b| b - b'0').collect())
            .collect();
        BenchmarkEntry {
            topology,
            n,
            truth: truth.to_string(),
            ga,
            successes: gens.len(),
            success_rate: if runs.is_empty() {
                0.0
            } else {
                gens.len() as f64 / runs.len() as f64
            },
            mean_generations: mean,
            std_generations: std,
            max_evaluations: runs.iter().map(|r| r.evaluations).max().unwrap_or(0),
            runs,
            raster,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub spec: ExperimentSpec,
    pub entries: Vec<BenchmarkEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub total: usize,
}

impl SweepRow {
    pub fn rate(&self, count: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            count as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub topology: String,
    pub n: usize,
    pub resources: u64,
    pub noise_seed: u64,
    pub ga: GaConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepEntry {
    pub fn new(topology: String, n: usize, ga: GaConfig, noise_seed: u64, sweep: SweepResult) -> Self {
        SweepEntry {
            topology,
            n,
            resources: sweep.resources,
            noise_seed,
            ga,
            rows: sweep
                .rows
                .iter()
                .map(|r| SweepRow {
                    threshold: r.threshold,
                    tp: r.tally.true_positive,
                    fp: r.tally.false_positive,
                    tn: r.tally.true_negative,
                    fn_: r.tally.false_negative,
                    total: r.tally.total,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: ExperimentSpec,
    pub entries: Vec<SweepEntry>,
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv output>", io),
        other => Error::Numerical(format!("csv encoding failed: {other:?}")),
    }
}

/// One row per run: `topology,n,run,seed,success,generations,evaluations,chromosome`.
pub fn write_benchmark_csv<W: Write>(report: &BenchmarkReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "topology",
        "n",
        "run",
        "seed",
        "success",
        "generations",
        "evaluations",
        "chromosome",
    ])
    .map_err(csv_error)?;
    for e in &report.entries {
        for r in &e.runs {
            w.write_record([
                e.topology.clone(),
                e.n.to_string(),
                r.run.to_string(),
                r.seed.to_string(),
                r.success.to_string(),
                r.generations.to_string(),
                r.evaluations.to_string(),
                r.chromosome.clone(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

/// One row per threshold and resource level: `threshold,N_r,tp,fp,tn,fn,total`.
pub fn write_sweep_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "N_r", "tp", "fp", "tn", "fn", "total"])
        .map_err(csv_error)?;
    for e in &report.entries {
        for r in &e.rows {
            w.write_record([
                r.threshold.to_string(),
                e.resources.to_string(),
                r.tp.to_string(),
                r.fp.to_string(),
                r.tn.to_string(),
                r.fn_.to_string(),
                r.total.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

pub(crate) fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::Numerical(format!("json encoding failed: {e}")))?;
    writeln!(out).map_err(|e| Error::io("<json output>", e))
}

fn with_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    // attach the real path to write failures
    f(&mut w).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn emit_benchmark(report: &BenchmarkReport, format: OutputFormat, path: &Path) -> Result<()> {
    with_file(path, |w| match format {
        OutputFormat::Csv => write_benchmark_csv(report, w),
        OutputFormat::Json => write_json(report, w),
    })
}

pub fn emit_sweep(report: &SweepReport, format: OutputFormat, path: &Path) -> Result<()> {
    with_file(path, |w| match format {
        OutputFormat::Csv => write_sweep_csv(report, w),
        OutputFormat::Json => write_json(report, w),
    })
}
