mod batch;
mod report;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlmt_core::oracle::{brute_force_dlmt, oracle_dlmt, SourceGraph, BRUTE_FORCE_LIMIT};
use dlmt_core::sim::{generate_topology, write_ndjson, GeneratorParams, RunMetrics, Scenario, Topology};
use dlmt_core::Energy;
use log::{debug, info};
use serde::Serialize;

/// Exit codes are part of the interface.
mod exit {
    pub const USAGE: u8 = 1;
    pub const GENERATION: u8 = 2;
    pub const NO_CONVERGENCE: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "dlmt", version, about = "DLMT protocol simulator and oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random connected unit-disk topology.
    Generate(GenerateArgs),
    /// Simulate a scenario and write its metrics.
    Run(RunArgs),
    /// Compute the centralized optimum for a topology or scenario.
    Oracle(OracleArgs),
    /// Run the protocol, the oracles and the baselines side by side.
    Compare(CompareArgs),
    /// Sweep seeds over generated topologies and emit one CSV row per run.
    Batch(batch::BatchArgs),
}

#[derive(Debug, Clone, Args)]
struct TopologyFlags {
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u16).range(1..))]
    nodes: u16,
    /// Side of the square deployment area.
    #[arg(long, default_value_t = 100.0)]
    area: f64,
    #[arg(long, default_value_t = 40.0)]
    range: f64,
    /// Joules.
    #[arg(long, default_value_t = 1.0)]
    energy_min: f64,
    /// Joules.
    #[arg(long, default_value_t = 10.0)]
    energy_max: f64,
    /// Number of source nodes; all nodes when omitted.
    #[arg(long)]
    sources: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    max_attempts: u32,
}

impl TopologyFlags {
    fn params(&self) -> Result<GeneratorParams, Failure> {
        Ok(GeneratorParams {
            node_count: usize::from(self.nodes),
            area_side: self.area,
            transmission_range: self.range,
            energy_min: joules(self.energy_min, "--energy-min")?,
            energy_max: joules(self.energy_max, "--energy-max")?,
            source_count: self.sources,
            max_attempts: self.max_attempts,
        })
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    topology: TopologyFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// NDJSON event trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Standard output when omitted.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "input")]
struct OracleInput {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    topology: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    input: OracleInput,
    /// Also cross-check by exhaustive enumeration (small graphs only).
    #[arg(long)]
    brute_force: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

/// A failed command: message for standard error plus the exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: exit::USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure::usage(format!("{}: {err}", path.display()))
    }
}

fn joules(j: f64, flag: &str) -> Result<Energy, Failure> {
    let mj = (j * 1000.0).round();
    if !(0.0..=f64::from(u32::MAX)).contains(&mj) {
        return Err(Failure::usage(format!("{flag} must be between 0 and {} J", u32::MAX / 1000)));
    }
    Ok(Energy::from_millijoules(mj as u32))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    // serde_json's message carries the line and column.
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let mut scenario: Scenario = read_json(path)?;
    scenario
        .validate()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(scenario)
}

/// Writes to `path`, or to standard output when there is none.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure::io(p, e))?;
            let mut out = BufWriter::new(file);
            write(&mut out).and_then(|_| out.flush()).map_err(|e| Failure::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out).map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    emit(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")
    })
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let params = args.topology.params()?;
    let topology = generate_topology(&params, args.seed).map_err(|e| match e {
        dlmt_core::sim::GenerationError::Disconnected { .. } => Failure {
            code: exit::GENERATION,
            message: e.to_string(),
        },
        other => Failure::usage(other.to_string()),
    })?;
    info!(
        "generated {} nodes, {} links",
        topology.nodes.len(),
        topology.links().len()
    );
    emit_json(args.out.as_deref(), &topology)
}

fn converged_or_fail(metrics: &RunMetrics) -> Result<(), Failure> {
    if metrics.converged {
        Ok(())
    } else {
        Err(Failure {
            code: exit::NO_CONVERGENCE,
            message: format!(
                "did not converge by t = {:.3} s ({} nodes disagree)",
                metrics.end_time,
                metrics.disagreeing_nodes.len()
            ),
        })
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let outcome = dlmt_core::sim::run(scenario).map_err(|e| Failure::usage(e.to_string()))?;
    debug!("{} trace records", outcome.trace.len());
    if let Some(path) = &args.trace {
        emit(Some(path), |out| write_ndjson(&outcome.trace, out))?;
    }
    emit_json(args.metrics.as_deref(), &outcome.metrics)?;
    converged_or_fail(&outcome.metrics)
}

#[derive(Debug, Serialize)]
struct OracleReport {
    oracle: dlmt_core::oracle::OracleResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    brute_force: Option<dlmt_core::oracle::OracleResult>,
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), Failure> {
    let topology: Topology = match (&args.input.scenario, &args.input.topology) {
        (Some(p), _) => load_scenario(p)?.topology,
        (None, Some(p)) => {
            let mut t: Topology = read_json(p)?;
            t.validate()
                .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            t
        }
        (None, None) => unreachable!("clap enforces one input"),
    };
    let graph = SourceGraph::from_topology(&topology, &Default::default());
    let oracle = oracle_dlmt(&graph).map_err(|e| Failure::usage(e.to_string()))?;
    let brute_force = if args.brute_force {
        if graph.len() > BRUTE_FORCE_LIMIT {
            return Err(Failure::usage(format!(
                "--brute-force supports at most {BRUTE_FORCE_LIMIT} sources, got {}",
                graph.len()
            )));
        }
        Some(brute_force_dlmt(&graph).map_err(|e| Failure::usage(e.to_string()))?)
    } else {
        None
    };
    emit_json(args.out.as_deref(), &OracleReport { oracle, brute_force })
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let report = report::compare(scenario).map_err(Failure::usage)?;
    if report.mismatch {
        eprintln!("MISMATCH: protocol result differs from the oracle");
    }
    match args.format {
        Format::Table => emit(args.out.as_deref(), |out| report.write_table(out))?,
        Format::Json => emit_json(args.out.as_deref(), &report)?,
    }
    converged_or_fail(&report.metrics)
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Batch(a) => batch::cmd_batch(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DLMT_LOG", "off")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dlmt: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
