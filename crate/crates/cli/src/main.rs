//! `fdsm`: command-line front end for the delayed subgradient toolkit.
//!
//! Exit codes: 0 on success, 1 on configuration errors (bad flags, bad config
//! file, parameters outside the theory's hypotheses), 2 on runtime errors.

// Validation uses `!(x > 0.0)`-style comparisons on purpose: unlike
// `x <= 0.0`, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bound;
mod config;
mod distributed;
mod inpaint;
mod report;
mod selftest;
mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{parse_config, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "fdsm",
    version,
    about = "Delayed subgradient methods over fixed-point constraints",
    disable_help_subcommand = true
)]
struct Cli {
    /// Path to a line-oriented `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Writes per-iteration trace CSVs next to the other outputs.
    #[arg(long, global = true)]
    trace: bool,

    /// Output directory (default: the current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Damages an image, restores it with the delayed iteration, reports PSNR.
    Inpaint,
    /// Grid search over (transform, tau, a, a0); writes sweep.csv and sweep_best.csv.
    Sweep,
    /// Prints an a-priori optimality-gap bound as `n,bound` CSV on stdout.
    Bound,
    /// Runs the averaged multi-worker recursion.
    Distributed,
    /// Runs fast sampled checks of the library's invariants.
    Selftest,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successes; everything else is a usage error.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {}", err.message());
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?,
        None => String::new(),
    };
    let raw = parse_config(&text)?;
    let mut cfg = ExperimentConfig::from_raw(&raw)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    let out_dir = cli.out.unwrap_or_else(|| PathBuf::from("."));
    if matches!(
        cli.command,
        Command::Inpaint | Command::Sweep | Command::Distributed
    ) {
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    }

    match cli.command {
        Command::Inpaint => inpaint::cmd_inpaint(&cfg, &out_dir, cli.trace),
        Command::Sweep => sweep::cmd_sweep(&cfg, &out_dir, cli.jobs, cli.trace),
        Command::Bound => bound::cmd_bound(&cfg),
        Command::Distributed => distributed::cmd_distributed(&cfg, &out_dir, cli.trace),
        Command::Selftest => selftest::cmd_selftest(),
    }
}
