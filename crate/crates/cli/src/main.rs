//! `qtment`: finite-temperature imaginary-time entanglement of spin chains from the command line.

mod commands;
mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, Method, ModelKind, RunConfig, Scope};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    #[error("{0} of {1} checks failed")]
    Validation(usize, usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(..) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<qtment::Error> for CliError {
    fn from(e: qtment::Error) -> Self {
        match e {
            qtment::Error::InvalidParameter(_) | qtment::Error::OverBudget { .. } | qtment::Error::Budget { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "qtment", version, about = "Imaginary-time entanglement of spin chains at finite temperature")]
#[command(args_conflicts_with_subcommands = true, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entanglement measures of two coupled spins over a temperature grid.
    QubitDemo(Flags),
    /// Entanglement spectrum of the imaginary-time cut, compared with the corner spectrum.
    Spectrum(Flags),
    /// TMRG sweep of the imaginary-time-cut entropy and free energy.
    Sweep(Flags),
    /// Fit S = -(c/3) ln T + b to a sweep table.
    Fit {
        /// Table written by `sweep`.
        input: Option<PathBuf>,
        #[arg(long)]
        velocity: Option<f64>,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the validation suite.
    Validate {
        #[arg(long, value_enum)]
        scope: Option<Scope>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Clone, Debug, Default)]
struct Flags {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    j: Option<f64>,
    #[arg(long)]
    temp: Option<f64>,
    /// Comma-separated.
    #[arg(long, value_delimiter = ',')]
    temps: Option<Vec<f64>>,
    #[arg(long)]
    dbeta: Option<f64>,
    #[arg(long)]
    m_kept: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn resolve(&self, extra: RunConfig) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            model: self.model,
            lambda: self.lambda,
            delta: self.delta,
            j: self.j,
            temp: self.temp,
            temps: self.temps.clone(),
            dbeta: self.dbeta,
            m_kept: self.m_kept,
            method: self.method,
            format: self.format,
            out: self.out.clone(),
            ..RunConfig::default()
        };
        Ok(base.overlay(flags).overlay(extra))
    }
}

fn finish(name: &'static str, report: output::Report, cfg: &RunConfig, default: Format) -> Result<(), CliError> {
    let text = report.render(&cfg.resolved(name), cfg.format.unwrap_or(default))?;
    output::emit(&text, cfg.out.as_deref())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::QubitDemo(f) => {
            let cfg = f.resolve(RunConfig::default())?;
            finish("qubit-demo", commands::qubit_demo(&cfg)?, &cfg, Format::Csv)
        }
        Command::Spectrum(f) => {
            let cfg = f.resolve(RunConfig::default())?;
            finish("spectrum", commands::spectrum(&cfg)?, &cfg, Format::Csv)
        }
        Command::Sweep(f) => {
            let cfg = f.resolve(RunConfig::default())?;
            finish("sweep", commands::sweep(&cfg)?, &cfg, Format::Csv)
        }
        Command::Fit { input, velocity, t_min, t_max, flags } => {
            let cfg = flags.resolve(RunConfig { input, velocity, t_min, t_max, ..RunConfig::default() })?;
            finish("fit", commands::fit(&cfg)?, &cfg, Format::Json)
        }
        Command::Validate { scope, flags } => {
            let cfg = flags.resolve(RunConfig { scope, ..RunConfig::default() })?;
            let scope = cfg.scope.unwrap_or(Scope::Quick);
            let checks = validate::run(scope, &cfg.tolerances)?;
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if cfg.out.is_some() || cfg.format.is_some() {
                finish("validate", validate::report(&checks), &cfg, Format::Csv)?;
            }
            if failed > 0 {
                return Err(CliError::Validation(failed, checks.len()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
