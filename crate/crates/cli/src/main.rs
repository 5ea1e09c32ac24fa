//! `clusternet`: generate, analyze, simulate and validate clustered
//! consensus experiments from a JSON config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clusternet_cli::commands::{cmd_analyze, cmd_generate, cmd_simulate, cmd_validate, RunContext};
use clusternet_cli::config::parse_sigma2_flag;
use clusternet_cli::CliError;

#[derive(Parser)]
#[command(
    name = "clusternet",
    about = "Clustered consensus network experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides out_dir from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Initial-condition seed; overrides x0_seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// sigma2 reading of the external Laplacian: full | nonzero | aggregate
    /// or an explicit numeric value.
    #[arg(long, global = true)]
    sigma2: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network from the config topology and write its graph file.
    Generate,
    /// Compute the rate certificate and write report.json.
    Analyze,
    /// Analyze, integrate the dynamics, and write CSV, verdict and SVG plots.
    Simulate,
    /// Re-parse an emitted trajectory.csv and recheck every row.
    Validate,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let config_path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let sigma2 = cli.sigma2.as_deref().map(parse_sigma2_flag).transpose()?;
    let ctx = RunContext::new(&config_path, cli.out, cli.seed, sigma2)?;
    match cli.command {
        Command::Generate => cmd_generate(&ctx),
        Command::Analyze => cmd_analyze(&ctx).map(|(_, json)| json),
        Command::Simulate => cmd_simulate(&ctx).map(|(_, summary)| summary),
        Command::Validate => cmd_validate(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            println!("{output}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
