//! `magicsim` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a simulation fails (deadlock, cycle
//! limit, violated invariant), 2 for bad input (flags, config, circuit, I/O).

pub mod config;
pub mod manifest;

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use magicsim_core::metrics::UnitMode;
use magicsim_core::sweep::SweepError;
use magicsim_core::{PriorityUpdate, RzHandling, SimError, SimulationMode};

pub use commands::SimulateReport;
pub use config::ResolvedConfig;
pub use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Input(anyhow::Error),
    /// Exit code 1.
    Sim(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Sim(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) | CliError::Sim(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Circuit(_) => CliError::Input(e.into()),
            _ => CliError::Sim(e.into()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(_) => CliError::Input(e.into()),
            SweepError::Trial { ref source, .. } => match CliError::from(source.clone()) {
                CliError::Input(_) => CliError::Input(e.into()),
                CliError::Sim(_) => CliError::Sim(e.into()),
            },
            SweepError::Sim(inner) => inner.into(),
        }
    }
}

/// Comma-separated list flag value.
#[derive(Debug, Clone)]
pub struct List<T>(pub Vec<T>);

fn list<T: std::str::FromStr>(s: &str) -> Result<List<T>, String>
where
    T::Err: std::fmt::Display,
{
    config::parse_list(s).map(List)
}

fn priority_update(s: &str) -> Result<PriorityUpdate, String> {
    match s {
        "static" => Ok(PriorityUpdate::Static),
        "full" => Ok(PriorityUpdate::Full),
        _ => Err(format!("expected static or full, got `{s}`")),
    }
}

fn unit_mode(s: &str) -> Result<UnitMode, String> {
    UnitMode::parse(s).ok_or_else(|| format!("expected logical-tiles or physical, got `{s}`"))
}

#[derive(Debug, Parser)]
#[command(
    name = "magicsim",
    version,
    about = "Stochastic magic-state supply simulator"
)]
pub struct Cli {
    /// Worker threads for trials and sweep cells; 0 uses every core. Results
    /// do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// OpenQASM 2.0 circuit.
    pub circuit: PathBuf,
    /// JSON file with SimConfig / mechanism fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON decomposition table extending the built-in one.
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
    /// JSON gate-duration table: {"default": 1, "overrides": {"cx": 2}}.
    #[arg(long)]
    pub durations: Option<PathBuf>,
    /// Output directory; a run manifest is written next to the outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[arg(long, value_parser = ["distillation", "cultivation", "rz"])]
    pub mechanism: Option<String>,
    /// A (no errors), B (production), C (injection) or D (both).
    #[arg(long)]
    pub mode: Option<SimulationMode>,
    #[arg(long)]
    pub trials: Option<u32>,
    /// Base seed; trial seeds derive from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `as-one-state` or `expand:n`; distillation and cultivation only.
    #[arg(long)]
    pub rz_handling: Option<RzHandling>,
    /// `static` or `full`.
    #[arg(long, value_parser = priority_update)]
    pub priority_update: Option<PriorityUpdate>,
    /// `logical-tiles` or `physical`.
    #[arg(long, value_parser = unit_mode)]
    pub cost_mode: Option<UnitMode>,
    #[arg(long)]
    pub max_cycles: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Static non-Clifford demand profile.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Independent trials at one unit count.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Number of production units.
        #[arg(short = 'F', long = "units")]
        units: Option<u32>,
        /// Also write per-cycle demand and stall traces.
        #[arg(long)]
        trace: bool,
    },
    /// Trials at every unit count in a range, plus the Mode-A curve.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        f_min: Option<u32>,
        #[arg(long)]
        f_max: Option<u32>,
        /// Plateau tolerance.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Mean volume over a grid of error rates, distances and unit counts.
    Sensitivity {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_parser = list::<f64>)]
        per_list: Option<List<f64>>,
        #[arg(long, value_parser = list::<u32>)]
        d_list: Option<List<u32>>,
        #[arg(long, value_parser = list::<u32>)]
        f_list: Option<List<u32>>,
    },
    /// Repeats the run recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Input)
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("cannot start worker threads")
        .map_err(CliError::Input)?;
    pool.install(|| commands::dispatch(cli.command))
}
