//! `dynsim`: config-driven runner for dynamical similarity experiments.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "dynsim",
    version,
    about = "Compare dynamical systems through their linearised dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Versioned TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the seed given in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, a positive number or `auto`.
    #[arg(long, global = true, env = "DYNSIM_THREADS")]
    pub threads: Option<String>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Simulate a system and write its trajectory.
    Generate,
    /// Compare two trajectory files.
    Compare,
    /// Run a parameter sweep or a pairwise batch.
    Sweep,
    /// Benchmark the optimizers on orthogonally similar SPD pairs.
    Bench,
    /// Embed a distance matrix with classical MDS.
    Mds,
}

fn configure_threads(threads: Option<&str>) -> CliResult<()> {
    let n = match threads.map(str::trim) {
        None | Some("auto") => return Ok(()),
        Some(s) => s
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Input(format!("--threads must be a positive integer or `auto`, got `{s}`")))?,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot configure thread pool: {e}")))
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads(cli.common.threads.as_deref())?;
    let config = cli
        .common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Input("--config is required".into()))?;
    std::fs::create_dir_all(&cli.common.out).map_err(|e| CliError::io(&cli.common.out, e))?;
    let ctx = commands::Context {
        config,
        out: &cli.common.out,
        seed: cli.common.seed,
        quiet: cli.common.quiet,
    };
    match cli.command {
        Command::Generate => commands::generate(&ctx),
        Command::Compare => commands::compare(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Bench => commands::bench(&ctx),
        Command::Mds => commands::mds(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
