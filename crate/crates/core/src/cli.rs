//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 when a
//! computation or I/O step fails.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::ctqw::{concatenated_distribution, TimeGrid};
use crate::error::{Error, Result};
use crate::fitness::{Metric, Objective};
use crate::ga::{run_traced, HaltReason};
use crate::graph::Topology;
use crate::harness::{
    benchmark_noiseless, benchmark_noisy, emit_benchmark, emit_sweep, parse_list, write_benchmark_csv, write_sweep_csv,
    ExperimentSpec, GaOverrides, NoiseSpec, OutputFormat, ProbeSpec, TargetFile,
};
use crate::measurement::sample_noisy_distribution;
use crate::seed::rng_from_seed;

/// Relative `--output` paths are resolved against this directory when set.
pub const OUTPUT_DIR_ENV: &str = "QWTOPO_OUTPUT_DIR";

/// Generations per search in `sweep` unless set explicitly.
const SWEEP_GENERATIONS: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "qwtopo",
    version,
    about = "Recover network topologies from quantum walk distributions"
)]
struct Cli {
    /// TOML file with [experiment], [ga] and [noise] tables; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the target distribution of a network (noisy with --resources).
    Simulate {
        #[command(flatten)]
        network: NetworkArgs,
        /// Expected detections per time slice; omit for exact probabilities.
        #[arg(long)]
        resources: Option<u64>,
        /// Seed for the shot-noise draw.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the target file here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one search against a target file or a generated target.
    Reconstruct {
        #[arg(long)]
        target: Option<PathBuf>,
        #[command(flatten)]
        network: NetworkArgs,
        #[command(flatten)]
        ga: GaArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Noiseless protocol: repeated searches per network size.
    Benchmark {
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long)]
        runs: Option<usize>,
        #[command(flatten)]
        ga: GaArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Noise protocol: Monte-Carlo threshold sweep.
    Sweep {
        #[command(flatten)]
        network: NetworkArgs,
        /// Comma-separated resource levels.
        #[arg(long)]
        resources: Option<String>,
        /// Comma-separated, strictly increasing thresholds.
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long)]
        mc_runs: Option<usize>,
        #[arg(long)]
        inner_runs: Option<usize>,
        #[command(flatten)]
        ga: GaArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct NetworkArgs {
    /// star, complete, line, circle or edgelist:<path>
    #[arg(long)]
    topology: Option<String>,
    /// Node count; lists (5,6) and ranges (5-10) where several sizes make sense.
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated evolution times.
    #[arg(long)]
    times: Option<String>,
    /// ramp, uniform, site:<i> or comma-separated amplitudes.
    #[arg(long)]
    probe: Option<String>,
}

#[derive(Debug, Args)]
struct GaArgs {
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    pe: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    pc: Option<f64>,
    #[arg(long)]
    pm: Option<f64>,
    #[arg(long)]
    ng: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// kld or kolmogorov
    #[arg(long)]
    metric: Option<String>,
}

impl GaArgs {
    fn overrides(&self) -> Result<GaOverrides> {
        Ok(GaOverrides {
            np: self.np,
            pe: self.pe,
            k: self.k,
            pc: self.pc,
            pm: self.pm,
            ng: self.ng,
            threshold: self.threshold,
            seed: self.seed,
            metric: self.metric.as_deref().map(str::parse::<Metric>).transpose()?,
        })
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json; defaults to the output extension, else json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    experiment: ExperimentSection,
    #[serde(default)]
    ga: GaOverrides,
    #[serde(default)]
    noise: NoiseSection,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    topology: Option<String>,
    n: Option<Sizes>,
    times: Option<Vec<f64>>,
    probe: Option<String>,
    runs: Option<usize>,
    output: Option<PathBuf>,
    format: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum Sizes {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    resources: Option<Vec<u64>>,
    thresholds: Option<Vec<f64>>,
    mc_runs: Option<usize>,
    inner_runs: Option<usize>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn config_err<E: std::fmt::Display>(what: &str) -> impl Fn(E) -> Error + '_ {
    move |e| Error::Config(format!("bad {what}: {e}"))
}

/// `5`, `5,7,9` or `5-10`.
fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(config_err("--n"))?;
            let b: usize = b.trim().parse().map_err(config_err("--n"))?;
            if b < a {
                return Err(Error::Config(format!("empty size range {part}")));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(config_err("--n"))?);
        }
    }
    Ok(out)
}

/// Network settings with file values filled in under the flags.
struct Network {
    topology: Option<Topology>,
    sizes: Option<Vec<usize>>,
    times: Option<TimeGrid>,
    probe: ProbeSpec,
}

impl Network {
    fn resolve(args: &NetworkArgs, file: &ExperimentSection) -> Result<Self> {
        let topology = args
            .topology
            .as_deref()
            .or(file.topology.as_deref())
            .map(str::parse::<Topology>)
            .transpose()?;
        let sizes = match (&args.n, &file.n) {
            (Some(s), _) => Some(parse_sizes(s)?),
            (None, Some(Sizes::One(n))) => Some(vec![*n]),
            (None, Some(Sizes::Many(v))) => Some(v.clone()),
            (None, None) => None,
        };
        let times = match (&args.times, &file.times) {
            (Some(s), _) => Some(TimeGrid::new(parse_list(s).map_err(config_err("--times"))?)?),
            (None, Some(t)) => Some(TimeGrid::new(t.clone())?),
            (None, None) => None,
        };
        let probe = args
            .probe
            .as_deref()
            .or(file.probe.as_deref())
            .map(str::parse::<ProbeSpec>)
            .transpose()?
            .unwrap_or_default();
        Ok(Network {
            topology,
            sizes,
            times,
            probe,
        })
    }

    fn topology(&self) -> Result<Topology> {
        self.topology
            .clone()
            .ok_or_else(|| Error::Config("--topology is required".into()))
    }

    fn sizes(&self) -> Result<Vec<usize>> {
        self.sizes
            .clone()
            .ok_or_else(|| Error::Config("--n is required".into()))
    }

    fn single_size(&self) -> Result<usize> {
        match self.sizes()?.as_slice() {
            [n] => Ok(*n),
            _ => Err(Error::Config("this command takes a single --n".into())),
        }
    }

    fn times_or_default(&self) -> TimeGrid {
        self.times
            .clone()
            .unwrap_or_else(|| TimeGrid::new(vec![0.5, 0.6]).expect("valid grid"))
    }
}

fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn output_format(explicit: Option<&str>, path: Option<&Path>) -> Result<OutputFormat> {
    if let Some(f) = explicit {
        return f.parse();
    }
    Ok(match path.and_then(Path::extension).and_then(|e| e.to_str()) {
        Some("csv") => OutputFormat::Csv,
        _ => OutputFormat::Json,
    })
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

#[derive(Serialize)]
struct ReconstructOutput {
    chromosome: String,
    halted_by: HaltReason,
    best_score: f64,
    generations: usize,
    evaluations: usize,
    edges: Vec<(usize, usize)>,
}

fn simulate(
    network: &Network,
    resources: Option<u64>,
    seed: u64,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let n = network.single_size()?;
    let truth = network.topology()?.build(n)?;
    let probe = network.probe.build(n)?;
    let grid = network.times_or_default();
    let mut dist = concatenated_distribution(&truth, &probe, &grid)?;
    if let Some(r) = resources {
        if r == 0 {
            return Err(Error::Config("--resources must be at least 1".into()));
        }
        dist = sample_noisy_distribution(&dist, r, &mut rng_from_seed(seed));
    }
    if let Some(path) = output {
        TargetFile::new(&grid, &dist).write(&resolve_output(path))?;
    }
    let flat = serde_json::to_string(dist.as_flat()).expect("finite floats");
    writeln!(out, "{flat}").map_err(stdout_err)
}

fn reconstruct(
    target: Option<&Path>,
    network: &Network,
    ga: &GaOverrides,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let (grid, dist) = match target {
        Some(path) => {
            let (grid, dist) = TargetFile::read(path)?.into_parts()?;
            if let Some(sizes) = &network.sizes {
                if sizes.as_slice() != [dist.n()] {
                    return Err(Error::Config(format!(
                        "--n {sizes:?} does not match the target file (n = {})",
                        dist.n()
                    )));
                }
            }
            if network.times.as_ref().is_some_and(|t| t != &grid) {
                return Err(Error::Config("--times does not match the target file".into()));
            }
            (grid, dist)
        }
        None => {
            let n = network.single_size()?;
            let grid = network.times_or_default();
            let truth = network.topology()?.build(n)?;
            let dist = concatenated_distribution(&truth, &network.probe.build(n)?, &grid)?;
            (grid, dist)
        }
    };
    let n = dist.n();
    let config = ga.resolve(n)?;
    let objective = Objective::new(dist, network.probe.build(n)?, grid, config.metric)?;
    let result = run_traced(&objective, &config)?.result;
    let report = ReconstructOutput {
        chromosome: result.best_chromosome.to_string(),
        halted_by: result.halted_by,
        best_score: result.best_score.value(),
        generations: result.generations_used,
        evaluations: result.evaluations,
        edges: result.best_chromosome.edges().collect(),
    };
    let json = serde_json::to_string_pretty(&report).expect("plain data serialises");
    if let Some(path) = output {
        let path = resolve_output(path);
        std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
    }
    writeln!(out, "{json}").map_err(stdout_err)
}

fn experiment_spec(network: &Network, ga: GaOverrides) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(network.topology()?, network.sizes()?);
    spec.times = network.times_or_default();
    spec.probe = network.probe.clone();
    spec.seed = ga.seed.unwrap_or(0);
    spec.ga = GaOverrides { seed: None, ..ga };
    Ok(spec)
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate {
            network,
            resources,
            seed,
            output,
        } => {
            let net = Network::resolve(&network, &file.experiment)?;
            let seed = seed.or(file.ga.seed).unwrap_or(0);
            simulate(&net, resources, seed, output.as_deref(), out)
        }
        Command::Reconstruct {
            target,
            network,
            ga,
            output,
        } => {
            let net = Network::resolve(&network, &file.experiment)?;
            let ga = file.ga.merged(&ga.overrides()?);
            reconstruct(target.as_deref(), &net, &ga, output.as_deref(), out)
        }
        Command::Benchmark {
            network,
            runs,
            ga,
            output,
        } => {
            let net = Network::resolve(&network, &file.experiment)?;
            let mut spec = experiment_spec(&net, file.ga.merged(&ga.overrides()?))?;
            if let Some(r) = runs.or(file.experiment.runs) {
                spec.runs = r;
            }
            let report = benchmark_noiseless(&spec)?;
            for e in &report.entries {
                let gens = e.mean_generations.map_or("-".to_string(), |g| format!("{g:.1}"));
                writeln!(
                    err,
                    "{} n={}: {}/{} recovered, mean generations {gens}",
                    e.topology,
                    e.n,
                    e.successes,
                    e.runs.len()
                )
                .map_err(stdout_err)?;
            }
            let path = output.output.or(file.experiment.output);
            let format = output_format(
                output.format.as_deref().or(file.experiment.format.as_deref()),
                path.as_deref(),
            )?;
            match path {
                Some(p) => emit_benchmark(&report, format, &resolve_output(&p)),
                None => match format {
                    OutputFormat::Csv => write_benchmark_csv(&report, out),
                    OutputFormat::Json => crate::harness::write_json(&report, out),
                },
            }
        }
        Command::Sweep {
            network,
            resources,
            thresholds,
            mc_runs,
            inner_runs,
            ga,
            output,
        } => {
            let net = Network::resolve(&network, &file.experiment)?;
            net.single_size()?;
            let mut ga = file.ga.merged(&ga.overrides()?);
            ga.ng = ga.ng.or(Some(SWEEP_GENERATIONS));
            let mut spec = experiment_spec(&net, ga)?;
            let defaults = NoiseSpec::default();
            let resources = match resources {
                Some(s) => parse_list(&s).map_err(config_err("--resources"))?,
                None => file.noise.resources.clone().unwrap_or(defaults.resources),
            };
            let thresholds = match thresholds {
                Some(s) => parse_list(&s).map_err(config_err("--thresholds"))?,
                None => file.noise.thresholds.clone().unwrap_or(defaults.thresholds),
            };
            spec.noise = Some(NoiseSpec {
                resources,
                thresholds,
                mc_runs: mc_runs.or(file.noise.mc_runs).unwrap_or(defaults.mc_runs),
                inner_runs: inner_runs.or(file.noise.inner_runs).unwrap_or(defaults.inner_runs),
            });
            let report = benchmark_noisy(&spec)?;
            let path = output.output.or(file.experiment.output);
            let format = output_format(
                output.format.as_deref().or(file.experiment.format.as_deref()),
                path.as_deref(),
            )?;
            match path {
                Some(p) => emit_sweep(&report, format, &resolve_output(&p)),
                None => match format {
                    OutputFormat::Csv => write_sweep_csv(&report, out),
                    OutputFormat::Json => crate::harness::write_json(&report, out),
                },
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_config() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_lists() {
        assert_eq!(parse_sizes("5").unwrap(), vec![5]);
        assert_eq!(parse_sizes("5,7").unwrap(), vec![5, 7]);
        assert_eq!(parse_sizes("5-8").unwrap(), vec![5, 6, 7, 8]);
        assert_eq!(parse_sizes("4, 6-7").unwrap(), vec![4, 6, 7]);
        assert!(parse_sizes("8-5").is_err());
        assert!(parse_sizes("five").is_err());
    }

    #[test]
    fn format_selection() {
        assert_eq!(
            output_format(None, Some(Path::new("a.csv"))).unwrap(),
            OutputFormat::Csv
        );
        assert_eq!(
            output_format(None, Some(Path::new("a.json"))).unwrap(),
            OutputFormat::Json
        );
        assert_eq!(output_format(None, None).unwrap(), OutputFormat::Json);
        assert_eq!(
            output_format(Some("csv"), Some(Path::new("a.json"))).unwrap(),
            OutputFormat::Csv
        );
        assert!(output_format(Some("xml"), None).is_err());
    }

    #[test]
    fn config_file_shape() {
        let cfg: FileConfig = toml::from_str(
            r#"
            [experiment]
            topology = "circle"
            n = [5, 6]
            times = [0.5, 0.6, 1.0]
            runs = 10

            [ga]
            ng = 20
            metric = "kolmogorov"

            [noise]
            resources = [500]
            mc_runs = 3
            "#,
        )
        .unwrap();
        assert!(matches!(cfg.experiment.n, Some(Sizes::Many(ref v)) if v == &[5, 6]));
        assert_eq!(cfg.ga.ng, Some(20));
        assert_eq!(cfg.ga.metric, Some(Metric::Kolmogorov));
        assert_eq!(cfg.noise.resources, Some(vec![500]));
        assert!(toml::from_str::<FileConfig>("[ga]\nbogus = 1\n").is_err());
        let single: FileConfig = toml::from_str("[experiment]\nn = 7\n").unwrap();
        assert!(matches!(single.experiment.n, Some(Sizes::One(7))));
    }
}
