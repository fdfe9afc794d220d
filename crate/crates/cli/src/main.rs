//! `atomlaser`: region maps, ensemble sweeps, trajectory simulation,
//! number-state jumps and experiment tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{SweepAxis, UnravelingChoice};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter values. Exit code 2.
    Usage(String),
    /// The computation itself failed. Exit code 3.
    Numeric(atom_laser::Error),
}

impl From<atom_laser::Error> for CliError {
    fn from(e: atom_laser::Error) -> Self {
        match e {
            atom_laser::Error::Domain(m) | atom_laser::Error::Config(m) => CliError::Usage(m),
            atom_laser::Error::InvalidGrid(m) => CliError::Usage(format!("invalid grid: {m}")),
            other => CliError::Numeric(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Aligned table; `experiment` only.
    Text,
}

#[derive(Parser)]
#[command(name = "atomlaser", version, about = "Physically realizable ensembles of a linearized atom laser")]
struct Cli {
    /// Flat TOML file of parameters for the chosen command; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realizable beta interval at each gamma (`gamma,beta_lo,beta_hi`).
    Region(RegionFlags),
    /// Closest-to-coherent ensemble along a chi or nu sweep.
    CcSweep(SweepFlags),
    /// Quantum-state-diffusion ensemble along a chi or nu sweep.
    QsdSweep(SweepFlags),
    /// Conditioned moment trajectories under a continuous unraveling.
    Simulate(SimulateFlags),
    /// Occupation histogram of the number-state jump unraveling.
    Jumps(JumpsFlags),
    /// Dimensionless parameters and criteria for trap experiments.
    Experiment(ExperimentFlags),
}

#[derive(Args, Serialize)]
pub struct RegionFlags {
    #[arg(long, allow_hyphen_values = true)]
    chi: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    n_gamma: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct SweepFlags {
    #[arg(long, value_enum)]
    axis: Option<SweepAxis>,
    #[arg(long, allow_hyphen_values = true)]
    fixed: Option<f64>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct SimulateFlags {
    #[arg(long, allow_hyphen_values = true)]
    chi: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, value_enum)]
    unraveling: Option<UnravelingChoice>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m10: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m01: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    save_every: Option<usize>,
    #[arg(long)]
    n_traj: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct JumpsFlags {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    n0: Option<u64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    burn_in: Option<f64>,
}

#[derive(Args, Serialize)]
pub struct ExperimentFlags {
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    sensitivity: Option<f64>,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = cli.config.as_deref();
    match &cli.command {
        Command::Region(f) => commands::region(&config::resolve(f, cfg, cli.seed)?, cli.format),
        Command::CcSweep(f) => {
            commands::sweep(&config::resolve(f, cfg, cli.seed)?, commands::SweepKind::Cc, cli.format)
        }
        Command::QsdSweep(f) => {
            commands::sweep(&config::resolve(f, cfg, cli.seed)?, commands::SweepKind::Qsd, cli.format)
        }
        Command::Simulate(f) => commands::simulate_cmd(&config::resolve(f, cfg, cli.seed)?, cli.format),
        Command::Jumps(f) => commands::jumps(&config::resolve(f, cfg, cli.seed)?, cli.format),
        Command::Experiment(f) => commands::experiment(&config::resolve(f, cfg, cli.seed)?, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, out.as_bytes()),
                None => std::io::stdout().write_all(out.as_bytes()),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            let diag = serde_json::json!({
                "error": "numeric",
                "kind": error_kind(&e),
                "message": e.to_string(),
            });
            eprintln!("{diag}");
            ExitCode::from(3)
        }
    }
}

fn error_kind(e: &atom_laser::Error) -> &'static str {
    use atom_laser::Error::*;
    match e {
        Domain(_) => "domain",
        InvalidGrid(_) => "invalid_grid",
        Integration { .. } => "integration",
        ConstraintViolation { .. } => "constraint_violation",
        Unstable { .. } => "unstable",
        Internal(_) => "internal",
        NoConvergence { .. } => "no_convergence",
        Truncation { .. } => "truncation",
        Config(_) => "config",
    }
}
