//! `critbbm`: tables of hitting probabilities, killed-particle laws and
//! their constants, Monte Carlo estimates, and the verification suite.
//!
//! Exit status: 0 on success, 1 when a computation or a verification check
//! fails, 2 on bad input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "critbbm", version, about = "Critical branching Brownian motion killed at 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Period, lattice invariant and power-law constants.
    Constants(ConstantsArgs),
    /// Hitting probabilities u_x(y) with pinching bounds.
    Hitprob(HitprobArgs),
    /// Tail and mass function of the number of killed particles.
    Killed(KilledArgs),
    /// Monte Carlo estimates.
    Simulate(SimulateArgs),
    /// Runs the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Offspring law: a JSON array file, or inline probabilities such as
    /// "0.25,0.5,0.25". Defaults to double-or-nothing.
    #[arg(long)]
    pub offspring: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Points s in (0, 1) for C_2(s) and C_4(s): "a,b,c" or "start:stop:count".
    #[arg(long, default_value = "0.1,0.25,0.5,0.75,0.9")]
    pub s: String,
}

#[derive(Debug, Args)]
pub struct HitprobArgs {
    #[command(flatten)]
    pub common: Common,
    /// Targets x.
    #[arg(long, default_value = "1")]
    pub x: String,
    /// Start points y; 11 evenly spaced points on [0, x] when absent.
    #[arg(long)]
    pub y: Option<String>,
}

#[derive(Debug, Args)]
pub struct KilledArgs {
    #[command(flatten)]
    pub common: Common,
    /// Start points y.
    #[arg(long, default_value = "1")]
    pub y: String,
    #[arg(long, default_value_t = 20)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Start point.
    #[arg(long, default_value_t = 1.0)]
    pub y: f64,
    /// Levels x for P(M >= x).
    #[arg(long, default_value = "3")]
    pub x: String,
    /// P(N >= k) is reported for k = 1..=k_max.
    #[arg(long, default_value_t = 5)]
    pub k_max: u64,
    #[arg(long, default_value_t = 10_000)]
    pub n_runs: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Checked for validity only; the checks use their own laws.
    #[arg(long)]
    pub offspring: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, default_value_t = 100_000)]
    pub n_runs: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants(a) => commands::constants(&a),
        Command::Hitprob(a) => commands::hitprob(&a),
        Command::Killed(a) => commands::killed(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("critbbm: {e}");
            e.exit_code()
        }
    }
}
