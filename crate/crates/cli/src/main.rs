//! `vpmacd` — config-driven runner for the daily-bar backtesting engine.
//!
//! One TOML file declares instruments, the train/test split, strategies,
//! and test parameters; the subcommand picks which artifacts to produce.
//! Exit codes: 0 success, 1 usage or config error, 2 data error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use vpmacd::report::OutputMeta;

use commands::Runner;

#[derive(Debug)]
pub enum CliError {
    /// Misuse or a malformed/invalid config file → exit 1.
    Usage(String),
    /// Problems with market data or result production → exit 2.
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "vpmacd",
    version,
    about = "Deterministic daily-bar backtester for MACD-family strategies"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,

    /// Directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides the bootstrap seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy on the test window; write scorecards, blotters,
    /// and equity curves.
    Backtest,
    /// Grid-search λ on the training window; write sweeps and the chosen-λ
    /// summary.
    Calibrate,
    /// Pairwise significance tests between strategies on the test window.
    Compare,
    /// Everything: backtest, calibrate, and compare.
    Report,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap models --help/--version as errors; they are successes here.
            let ok = matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let loaded = config::load(&cli.config)?;
    let seed = cli.seed.unwrap_or(loaded.run.tests.seed);
    let runner = Runner {
        loaded: &loaded,
        out_dir: &cli.out,
        seed,
        meta: OutputMeta {
            engine: format!("vpmacd {}", vpmacd::ENGINE_VERSION),
            config_hash: loaded.hash.clone(),
            seed,
        },
    };
    match cli.command {
        Command::Backtest => runner.cmd_backtest(),
        Command::Calibrate => runner.cmd_calibrate(),
        Command::Compare => runner.cmd_compare(),
        Command::Report => runner.cmd_report(),
    }
}
