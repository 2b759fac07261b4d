//! Command-line front end: `spherimax eta|verify|phi|multiplicity`.
//!
//! Exit codes: 0 success, 1 input/solver/I/O error or failed certification,
//! 2 feasibility condition fails, 3 multiplicity not found.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::CliError;
pub use config::{load_config, RunConfig};

/// Worker-thread count for the inner parallel loops.
pub const THREADS_ENV: &str = "SPHERIMAX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spherimax", version, about = "Spherical maxima, the level function eta and its multipliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate eta and psi; writes eta_curve.csv and eta_curve.svg
    Eta(Common),
    /// Run the verification suite; writes report.json
    Verify(Common),
    /// Tabulate the multiplier map; writes phi_map.csv and phi_map.svg
    Phi(Common),
    /// Search for two solutions sharing one multiplier; writes multiplicity.json
    Multiplicity(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    // a pool may already exist when called repeatedly in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

type Handler = fn(&RunConfig) -> Result<(), CliError>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 1;
    }
    let (common, cmd): (&Common, Handler) = match &cli.command {
        Command::Eta(c) => (c, commands::cmd_eta),
        Command::Verify(c) => (c, commands::cmd_verify),
        Command::Phi(c) => (c, commands::cmd_phi),
        Command::Multiplicity(c) => (c, commands::cmd_multiplicity),
    };
    let result = load_config(&common.config).map_err(CliError::from).and_then(|mut cfg| {
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &common.out {
            cfg.output_dir = out.clone();
        }
        cmd(&cfg)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
