//! Command-line front end for the expansion-timing library.
//!
//! The binary reads a TOML scenario file, runs one of five subcommands
//! against the closed forms, the finite-difference solver, or the Monte
//! Carlo engines from `expansion-core`, and writes a single flat table to
//! stdout or to a file.
//!
//! Exit codes: `0` success, `1` model/domain failure (infeasible or
//! overflowing scenario), `2` configuration or usage error, `3` a
//! verification check failed.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

use commands::{CommandOutput, Suite};
use output::Format;

/// Anything a subcommand can fail with, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration file or command line (exit 2).
    #[error("{0}")]
    Config(String),
    /// Structurally sound scenario the model cannot evaluate (exit 1).
    #[error("{0}")]
    Domain(String),
    /// A verification check failed (exit 3).
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<expansion_core::model::DomainError> for CliError {
    fn from(e: expansion_core::model::DomainError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<expansion_core::closed_form::EvalError> for CliError {
    fn from(e: expansion_core::closed_form::EvalError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<expansion_core::vi_solver::SolveError> for CliError {
    fn from(e: expansion_core::vi_solver::SolveError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<expansion_core::simulator::SimError> for CliError {
    fn from(e: expansion_core::simulator::SimError) -> Self {
        CliError::Domain(e.to_string())
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Directory to write the table into instead of stdout.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Table format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Scenario tools for optimal business expansion under exponential utility.
#[derive(Debug, Parser)]
#[command(name = "expansion", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report feasibility, case, and the expansion schedule.
    Classify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate the optimal exposure path over time, with threshold markers.
    Boundary {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of samples across the time range.
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Start of the time range in years (default 0).
        #[arg(long)]
        from: Option<f64>,
        /// End of the time range in years (default: the horizon).
        #[arg(long)]
        to: Option<f64>,
    },
    /// Sweep one scalar parameter and tabulate value and schedule per point.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Field of the scenario's parameter table to sweep.
        #[arg(long)]
        param: String,
        /// First parameter value.
        #[arg(long)]
        from: f64,
        /// Last parameter value.
        #[arg(long)]
        to: f64,
        /// Number of sweep points.
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Check the solver and the simulator against the closed forms.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Run only one suite.
        #[arg(long, value_enum)]
        only: Option<Suite>,
        /// Override the scenario's Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo estimates for the optimal policy and a set of rivals.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the scenario's Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    let started = Instant::now();
    let (common, output): (&CommonArgs, CommandOutput) = match command {
        Command::Classify { common } => {
            let cfg = config::ScenarioConfig::load(&common.config)?;
            (common, commands::cmd_classify(&cfg)?)
        }
        Command::Boundary {
            common,
            points,
            from,
            to,
        } => {
            let cfg = config::ScenarioConfig::load(&common.config)?;
            (common, commands::cmd_boundary(&cfg, *points, *from, *to)?)
        }
        Command::Sweep {
            common,
            param,
            from,
            to,
            points,
        } => {
            let cfg = config::ScenarioConfig::load(&common.config)?;
            (common, commands::cmd_sweep(&cfg, param, *from, *to, *points)?)
        }
        Command::Verify { common, only, seed } => {
            let cfg = config::ScenarioConfig::load(&common.config)?;
            (common, commands::cmd_verify(&cfg, *only, *seed)?)
        }
        Command::Simulate { common, seed } => {
            let cfg = config::ScenarioConfig::load(&common.config)?;
            (common, commands::cmd_simulate(&cfg, *seed)?)
        }
    };
    output.table.emit(common.format, common.out.as_deref())?;
    eprintln!(
        "{} finished in {:.3}s",
        output.table.name,
        started.elapsed().as_secs_f64()
    );
    match output.failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

/// Parses the command line, runs it, and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
