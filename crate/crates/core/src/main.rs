use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use voltide::pipeline::{Command, Pipeline};
use voltide::{Error, Execution};

#[derive(Parser)]
#[command(
    name = "voltide",
    version,
    about = "Stablecoin-led crypto volatility research pipeline"
)]
struct Cli {
    /// JSON run config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Overrides the config's `out_dir`.
    #[arg(long, global = true, env = "VOLTIDE_OUT")]
    out: Option<PathBuf>,
    /// Run every stage on the current thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Load OHLCV files, transform, winsorise and run ADF tests.
    Ingest,
    /// PC1 factors and Horn's parallel analysis.
    Factors,
    /// Copula Granger causality tests.
    Cgc,
    /// Expanding-window forecast comparison.
    BacktestMse,
    /// Volatility-targeting strategy backtest.
    BacktestStrategy,
    /// Write a synthetic market into the config's data directory.
    Simulate,
    /// Every stage from ingest to the strategy backtest.
    ReportAll,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Ingest => Command::Ingest,
            Cmd::Factors => Command::Factors,
            Cmd::Cgc => Command::Cgc,
            Cmd::BacktestMse => Command::BacktestMse,
            Cmd::BacktestStrategy => Command::BacktestStrategy,
            Cmd::Simulate => Command::Simulate,
            Cmd::ReportAll => Command::ReportAll,
        }
    }
}

fn run(cli: Cli) -> voltide::Result<()> {
    let config = cli.config.ok_or_else(|| Error::Config {
        field: "--config".into(),
        reason: "a config file is required".into(),
    })?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let pipeline = Pipeline::from_file(&config, cli.seed, cli.out)?.with_execution(exec);
    pipeline.run(cli.command.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
