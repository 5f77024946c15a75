//! Command-line surface: declares potentials and experiments in a TOML
//! config, runs the solver modules over z-grids, and emits deterministic
//! CSV or JSON tables.
//!
//! Exit codes: 0 pass, 1 numerical failure or failed verdict, 2
//! validation failure.

mod config;
mod experiments;
mod output;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::Config;
use experiments::{Outcome, Runtime};
use output::Meta;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        CliError::Numerical(msg.into())
    }
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "weylkit",
    version,
    about = "Weyl-Titchmarsh M-matrix experiments for half-line matrix Schrödinger operators"
)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted and the config names none.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Integrator relative tolerance override.
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Integrator absolute tolerance override.
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Integrator step budget override.
    #[arg(long, global = true)]
    max_steps: Option<usize>,
    /// Worker threads for grid dispatch.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed override for randomized experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Half-line M-matrix over the spectral grid.
    Mfun,
    /// Expansion coefficients and partial sums.
    Asymp,
    /// Weyl-disk sampling and membership defects.
    Disk,
    /// M-matrix through the Volterra integral equation.
    Volterra,
    /// Diagonal Green's matrix and its expansion.
    Green,
    /// Exponential locality of the M-matrix.
    Locality,
    /// Asymptotic-order verification (scaled remainders).
    Verify,
    /// Cross-method comparison.
    Compare,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mfun => "mfun",
            Command::Asymp => "asymp",
            Command::Disk => "disk",
            Command::Volterra => "volterra",
            Command::Green => "green",
            Command::Locality => "locality",
            Command::Verify => "verify",
            Command::Compare => "compare",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(pass) => std::process::exit(if pass { 0 } else { 1 }),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::validation("--config PATH is required"))?;
    let text = fs::read_to_string(config_path).map_err(|e| {
        CliError::validation(format!("--config {}: {e}", config_path.display()))
    })?;
    let mut cfg = Config::parse(&text)?;
    cfg.validate(cli.command.name())?;

    if let Some(rtol) = cli.rtol {
        cfg.tolerances.rtol = rtol;
    }
    if let Some(atol) = cli.atol {
        cfg.tolerances.atol = atol;
    }
    if let Some(max_steps) = cli.max_steps {
        cfg.tolerances.max_steps = max_steps;
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::validation(format!("--jobs: {e}")))?;
    }

    let rt = Runtime::from_config(&cfg, cli.seed)?;
    let outcome = dispatch(cli.command, &cfg, &rt)?;

    let meta = Meta {
        tool: "weylkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cli.command.name().into(),
        seed: rt.seed,
        rtol: cfg.tolerances.rtol,
        atol: cfg.tolerances.atol,
        limit_rtol: cfg.tolerances.limit_rtol,
        max_horizon: cfg.tolerances.max_horizon,
        volterra_tol: cfg.tolerances.volterra_tol,
        m: rt.pot.dim(),
    };
    write_outcome(cli, &cfg, &meta, &outcome)?;
    println!("{}", outcome.summary);
    Ok(outcome.pass)
}

fn dispatch(cmd: Command, cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    match cmd {
        Command::Mfun => experiments::run_mfun(cfg, rt),
        Command::Asymp => experiments::run_asymp(cfg, rt),
        Command::Disk => experiments::run_disk(cfg, rt),
        Command::Volterra => experiments::run_volterra(cfg, rt),
        Command::Green => experiments::run_green(cfg, rt),
        Command::Locality => experiments::run_locality(cfg, rt),
        Command::Verify => experiments::run_verify(cfg, rt),
        Command::Compare => experiments::run_compare(cfg, rt),
    }
}

fn write_outcome(
    cli: &Cli,
    cfg: &Config,
    meta: &Meta,
    outcome: &Outcome,
) -> Result<(), CliError> {
    let format = cli
        .format
        .clone()
        .or_else(|| cfg.output.format.clone())
        .unwrap_or_else(|| "csv".into());
    let path = cli
        .out
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from));

    let mut buffer: Vec<u8> = Vec::new();
    match format.as_str() {
        "csv" => output::write_csv(&mut buffer, meta, &outcome.rows)?,
        "json" => output::write_json(&mut buffer, meta, &outcome.rows)?,
        other => {
            return Err(CliError::validation(format!(
                "output.format: '{other}' is not one of csv, json"
            )))
        }
    }
    match path {
        Some(p) => fs::write(&p, &buffer)?,
        None => std::io::stdout().write_all(&buffer)?,
    }
    Ok(())
}
