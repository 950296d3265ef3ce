mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;

/// Distribution estimates for a linear functional of a random elliptic PDE
/// solution, by preintegration and randomly shifted lattice rules.
#[derive(Debug, Parser)]
#[command(name = "preqmc", version)]
struct Cli {
    /// Run configuration (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Reuse the configuration echoed in the header of an output CSV.
    #[arg(long, global = true, conflicts_with = "config")]
    from_csv: Option<PathBuf>,

    /// Worker threads; 1 gives bitwise reproducible output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Construct a generating vector by CBC and write it to `vector_file`.
    Cbc,
    /// Estimate F and f on the t-grid, one CSV per method.
    Estimate,
    /// RMSE at `t_ref` over `N_list` with fitted slopes.
    Convergence,
    /// Kolmogorov–Smirnov tests of fresh samples against the estimated cdf.
    Kstest,
    /// Print the weight constants for the configured problem.
    Constants,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let config = match (&cli.config, &cli.from_csv) {
        (Some(p), _) => RunConfig::from_file(p, &overrides)?,
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            RunConfig::from_echo(&text, &overrides)?
        }
        (None, None) => RunConfig::parse("", &overrides)?,
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::io(&cli.out_dir, e))?;
    let ctx = Context {
        config,
        out_dir: cli.out_dir,
    };
    log::info!("config hash {:016x}", ctx.config.hash());
    match cli.command {
        Command::Cbc => commands::cbc(&ctx),
        Command::Estimate => commands::estimate(&ctx),
        Command::Convergence => commands::convergence(&ctx),
        Command::Kstest => commands::kstest(&ctx),
        Command::Constants => commands::constants(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
