//! Command-line front end.
//!
//! Exit codes: 0 success or accepted, 2 rejected by a gate, 3 infeasible
//! design, 4 input error, 5 runtime error.

mod commands;
pub mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error as ThisError;

use crate::error::Error;
use crate::holevo::ThresholdVariant;

pub use config::{RunConfig, Setup};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INPUT: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot read config {}: {source}", path.display())]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {}: {source}", path.display())]
    ConfigParse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Infeasible { .. }) => EXIT_INFEASIBLE,
            CliError::Core(
                Error::InsufficientSifted { .. } | Error::EmptyBatch | Error::TrackerHalted { .. },
            ) => EXIT_RUNTIME,
            CliError::Core(_)
            | CliError::ConfigRead { .. }
            | CliError::ConfigParse { .. }
            | CliError::Usage(_) => EXIT_INPUT,
            CliError::Write { .. } => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "secure-pac",
    version,
    about = "Plan, simulate and audit certified learning over noisy channels"
)]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the main result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Information-gap curve and the critical noise rate.
    Threshold {
        #[arg(long, value_parser = parse_variant)]
        variant: Option<ThresholdVariant>,
        #[arg(long, default_value_t = 0.001)]
        grid_step: f64,
    },
    /// Sample budgets for the configured design.
    Plan {
        #[command(flatten)]
        design: DesignArgs,
        /// Emit the plan at this many evenly spaced splits instead.
        #[arg(long)]
        sweep_alpha: Option<usize>,
    },
    /// Halting probabilities for a run-of-successes test.
    Halting {
        #[command(flatten)]
        design: DesignArgs,
        /// Per-trial pass probability; the design's worst admissible value by default.
        #[arg(long)]
        q: Option<f64>,
        /// Trial budget; the planned certification budget by default.
        #[arg(long)]
        m_cert: Option<u64>,
        /// Emit the halting probability after every trial.
        #[arg(long)]
        trace: bool,
    },
    /// Measure the error rate of a simulated channel.
    Qber {
        #[command(flatten)]
        design: DesignArgs,
        /// Raw channel uses.
        #[arg(long)]
        uses: Option<u64>,
        #[arg(long)]
        holdout_fraction: Option<f64>,
    },
    /// Run the protocol replicas and apply the acceptance gates.
    Simulate {
        #[command(flatten)]
        design: DesignArgs,
    },
    /// Apply the acceptance gates to supplied or analytic evidence.
    Decide {
        #[command(flatten)]
        design: DesignArgs,
        /// Operational noise rate; the channel's nominal rate by default.
        #[arg(long)]
        measured_eta: Option<f64>,
        /// Successful replicas out of `--replicas`.
        #[arg(long, conflicts_with = "p_l")]
        successes: Option<u64>,
        /// Learning-probability value to gate on directly.
        #[arg(long)]
        p_l: Option<f64>,
    },
}

/// Overrides for the design and channel fields of the configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub epsilon_star: Option<f64>,
    #[arg(long)]
    pub delta_star: Option<f64>,
    #[arg(long)]
    pub m_h: Option<u64>,
    #[arg(long)]
    pub eta_c: Option<f64>,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<ThresholdVariant>,
    #[arg(long)]
    pub h_size: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Use an RCN channel with this flip rate.
    #[arg(long, conflicts_with_all = ["intrinsic_flip", "eavesdrop_fraction"])]
    pub eta: Option<f64>,
    /// Use a BB84 channel with this intrinsic flip rate.
    #[arg(long)]
    pub intrinsic_flip: Option<f64>,
    /// Use a BB84 channel with this intercept-resend fraction.
    #[arg(long)]
    pub eavesdrop_fraction: Option<f64>,
}

fn parse_variant(s: &str) -> Result<ThresholdVariant, String> {
    ThresholdVariant::ALL
        .into_iter()
        .find(|v| v.name() == s)
        .ok_or_else(|| format!("unknown variant `{s}` (expected standard or corrected)"))
}

/// Parse arguments, run, and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(Error::Infeasible { .. }) = e {
                if let Some(hint) = commands::infeasibility_hint(&cli) {
                    eprintln!("{hint}");
                }
            }
            e.exit_code()
        }
    }
}
