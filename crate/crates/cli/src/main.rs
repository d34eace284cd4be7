//! `flashmmi` command-line front end.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "flashmmi",
    version,
    about = "MMI read-threshold optimization and LDPC simulation for MLC flash"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Word-line voltages and mutual information per method (CSV).
    Quantize(Common),
    /// Build an LDPC code and write it as an alist file plus a report.
    Construct(Common),
    /// Monte Carlo FER/BER sweep (CSV).
    Simulate(Common),
    /// Mutual information of every method against MMI (CSV).
    CompareMi(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML config file; built-in defaults apply to anything it omits.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path. CSV commands write to standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections (0 uses all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Config override `key=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Quantize(c) => commands::quantize(&c),
        Command::Construct(c) => commands::construct(&c),
        Command::Simulate(c) => commands::simulate(&c),
        Command::CompareMi(c) => commands::compare_mi(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Failure::Io(_) => 1,
                Failure::Config(_) => 2,
                Failure::Numerical(_) => 3,
                Failure::Construction(_) => 4,
            })
        }
    }
}
