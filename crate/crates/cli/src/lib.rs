//! Command-line front end: `certify`, `mc-risk` and `verify-lemmas`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certs;
pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "resolv",
    version,
    about = "Risk certificates for penalized MLE over eps-grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute every requested certificate for each sample size.
    Certify(ExperimentArgs),
    /// Monte Carlo risk against the certificates.
    McRisk(ExperimentArgs),
    /// Randomized checks of the supporting inequalities.
    VerifyLemmas(LemmaArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Run only these check ids.
    #[arg(long = "check")]
    pub checks: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_threads();
    match cli.command {
        Command::Certify(a) => commands::certify(&a),
        Command::McRisk(a) => commands::mc_risk(&a),
        Command::VerifyLemmas(a) => commands::verify_lemmas(&a),
    }
}

/// `RESOLV_THREADS` caps the worker pool; the first call wins.
fn init_threads() {
    if let Some(k) = std::env::var("RESOLV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
}
