//! Command-line front end for the `qbattery` simulator.
//!
//! Settings are resolved as built-in defaults, then the `--config` file (TOML,
//! or a previous run's `.manifest.json`), then flags. Exit codes: 0 success,
//! 1 I/O failure, 2 usage or configuration error, 3 numerical contract violation.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qbattery::ergotropy::Quantity;
use qbattery::FitModel;

use crate::config::{parse_f64_list, parse_named_params, parse_usize_list, RunConfig};
use crate::manifest::Manifest;

/// Primary output bytes plus any side files.
type Rendered = (Vec<u8>, Vec<(PathBuf, Vec<u8>)>);

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical contract violation: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<qbattery::Error> for CliError {
    fn from(e: qbattery::Error) -> Self {
        match e {
            qbattery::Error::Domain(m) => CliError::Usage(m),
            qbattery::Error::ContractViolation(m) => CliError::Numerical(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "qbattery", version, about = "Two-qubit quantum battery collision-model simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximal extractable work over an (E, n, k, δt) grid.
    Sweep(SweepArgs),
    /// Work inside and across collisions on a fine time grid.
    Trajectory(TrajectoryArgs),
    /// BLP non-Markovianity of the single-collision map per δt.
    Blp(BlpArgs),
    /// Least-squares fit of a work curve to one of the M1..M4 families.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file, or a `.manifest.json` from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores). Never changes the output.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; stdout when absent. A manifest is written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_quantity)]
    pub quantity: Option<Quantity>,
    /// Maximize the locally passive state's relative phase (G_p only).
    #[arg(long)]
    pub phase_sweep: bool,
    /// E values, e.g. `0,0.2,0.4` or `0:1:0.1`.
    #[arg(long, value_parser = f64_list)]
    pub entanglement: Option<List<f64>>,
    /// Collision counts, e.g. `0,2,4` or `0:30`.
    #[arg(long, value_parser = usize_list)]
    pub collisions: Option<List<usize>>,
    #[arg(long, value_parser = f64_list)]
    pub couplings: Option<List<f64>>,
    #[arg(long = "delta-t", value_parser = f64_list)]
    pub delta_t: Option<List<f64>>,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_quantity)]
    pub quantity: Option<Quantity>,
    #[arg(long)]
    pub phase_sweep: bool,
    /// A single E value.
    #[arg(long)]
    pub entanglement: Option<f64>,
    /// Number of collisions to follow.
    #[arg(long)]
    pub collisions: Option<usize>,
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long = "delta-t", value_parser = f64_list)]
    pub delta_t: Option<List<f64>>,
}

#[derive(Debug, Args)]
pub struct BlpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "delta-t", value_parser = f64_list)]
    pub delta_t: Option<List<f64>>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Coupling for the scan (default 1).
    #[arg(long)]
    pub couplings: Option<f64>,
    /// Extend each trace over this many consecutive collisions.
    #[arg(long)]
    pub collisions: Option<usize>,
    /// Also write `delta_t,t,D` for each optimal pair.
    #[arg(long)]
    pub trace_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_fit_model)]
    pub model: Option<FitModel>,
    /// CSV with `E` and `value` columns, such as a sweep output.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Starting parameters, e.g. `c=0.5,a=1.0`.
    #[arg(long, value_parser = parse_named_params)]
    pub init: Option<std::collections::BTreeMap<String, f64>>,
    /// Row filters for multi-curve inputs.
    #[arg(long, value_parser = parse_quantity)]
    pub quantity: Option<Quantity>,
    #[arg(long)]
    pub collisions: Option<usize>,
    #[arg(long)]
    pub couplings: Option<f64>,
    #[arg(long = "delta-t")]
    pub delta_t: Option<f64>,
}

/// A parsed comma-separated list flag.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

fn f64_list(s: &str) -> Result<List<f64>, String> {
    parse_f64_list(s).map(List)
}

fn usize_list(s: &str) -> Result<List<usize>, String> {
    parse_usize_list(s).map(List)
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    s.parse()
}

fn parse_fit_model(s: &str) -> Result<FitModel, String> {
    s.parse()
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep",
            Command::Trajectory(_) => "trajectory",
            Command::Blp(_) => "blp",
            Command::Fit(_) => "fit",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Sweep(a) => &a.common,
            Command::Trajectory(a) => &a.common,
            Command::Blp(a) => &a.common,
            Command::Fit(a) => &a.common,
        }
    }

    /// Overlays the flags onto `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.common().seed {
            cfg.seed = Some(seed);
        }
        match self {
            Command::Sweep(a) => {
                let s = &mut cfg.sweep;
                set(&mut s.quantity, a.quantity);
                s.phase_sweep |= a.phase_sweep;
                set(&mut s.entanglement, list(&a.entanglement));
                set(&mut s.collisions, list(&a.collisions));
                if a.couplings.is_some() {
                    s.couplings = list(&a.couplings);
                }
                if a.delta_t.is_some() {
                    s.delta_t = list(&a.delta_t);
                }
            }
            Command::Trajectory(a) => {
                let t = &mut cfg.trajectory;
                set(&mut t.quantity, a.quantity);
                t.phase_sweep |= a.phase_sweep;
                set(&mut t.entanglement, a.entanglement);
                set(&mut t.collisions, a.collisions);
                set(&mut t.substeps, a.substeps);
                set(&mut t.delta_t, list(&a.delta_t));
            }
            Command::Blp(a) => {
                let b = &mut cfg.blp;
                set(&mut b.delta_t, list(&a.delta_t));
                set(&mut b.grid_points, a.grid_points);
                set(&mut b.k, a.couplings);
                set(&mut b.collisions, a.collisions);
                if a.trace_output.is_some() {
                    b.trace_output = a.trace_output.clone();
                }
            }
            Command::Fit(a) => {
                let f = &mut cfg.fit;
                set(&mut f.model, a.model);
                if a.input.is_some() {
                    f.input = a.input.clone();
                }
                if a.init.is_some() {
                    f.init = a.init.clone();
                }
                if a.quantity.is_some() {
                    f.quantity = a.quantity;
                }
                if a.collisions.is_some() {
                    f.collisions = a.collisions;
                }
                if a.couplings.is_some() {
                    f.k = a.couplings;
                }
                if a.delta_t.is_some() {
                    f.delta_t = a.delta_t;
                }
            }
        }
    }
}

fn list<T: Clone>(flag: &Option<List<T>>) -> Option<Vec<T>> {
    flag.as_ref().map(|l| l.0.clone())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(command: &Command) -> Result<RunConfig, CliError> {
    let mut cfg = match &command.common().config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    command.apply(&mut cfg);
    if !matches!(command, Command::Fit(_)) {
        cfg.require_seed()?;
        cfg.validate_model()?;
    }
    Ok(cfg)
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let command = &cli.command;
    let cfg = resolve_config(command)?;
    let common = command.common();
    let threads = match common.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;

    let (primary, extra) = pool.install(|| -> Result<Rendered, CliError> {
        Ok(match command {
            Command::Sweep(_) => (commands::sweep(&cfg)?, vec![]),
            Command::Trajectory(_) => (commands::trajectory(&cfg)?, vec![]),
            Command::Blp(_) => {
                let (summary, traces) = commands::blp(&cfg)?;
                let extra = match (traces, &cfg.blp.trace_output) {
                    (Some(t), Some(path)) => vec![(path.clone(), t)],
                    _ => vec![],
                };
                (summary, extra)
            }
            Command::Fit(_) => (commands::fit(&cfg)?, vec![]),
        })
    })?;

    let mut outputs = Vec::new();
    match &common.output {
        Some(path) => {
            write_file(path, &primary)?;
            outputs.push(path.clone());
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&primary)?;
        }
    }
    for (path, bytes) in &extra {
        write_file(path, bytes)?;
        outputs.push(path.clone());
    }
    if let Some(path) = &common.output {
        let manifest = Manifest {
            tool: "qbattery".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.name().into(),
            seed: cfg.seed,
            threads,
            config: cfg.clone(),
            outputs,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        json.push(b'\n');
        write_file(&Manifest::path_for(path), &json)?;
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qbattery: {e}");
            e.exit_code()
        }
    }
}
