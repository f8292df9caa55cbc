//! `tdt`: compress raw floating-point arrays by clustering the bytes of each
//! value, and inspect how that clustering is chosen.

mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::io;

use clap::{Parser, Subcommand};

use commands::{AnalyzeArgs, BenchArgs, CompressArgs, DecompressArgs, PlanArgs};
use config::{GlobalArgs, Settings};
use error::{CliResult, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "tdt", version, about = "Lossless compression of floating-point arrays by byte-group clustering")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a raw float array into a container.
    Compress(CompressArgs),
    /// Restore the raw bytes from a container.
    Decompress(DecompressArgs),
    /// Print the entropy profile and order-k entropies of a raw array.
    Analyze(AnalyzeArgs),
    /// Print the clustering plan and the score of every candidate.
    Plan(PlanArgs),
    /// Compress every dataset in a directory with each codec and mode.
    Bench(BenchArgs),
}

fn main() {
    std::process::exit(run(std::env::args_os()));
}

fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tdt: error: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let settings = Settings::load(&cli.global)?;
    let mut out = io::stdout().lock();
    match &cli.command {
        Command::Compress(a) => commands::compress(&settings, a),
        Command::Decompress(a) => commands::decompress(&settings, a),
        Command::Analyze(a) => commands::analyze(&settings, a, &mut out),
        Command::Plan(a) => commands::plan(&settings, a, &mut out),
        Command::Bench(a) => commands::bench(&settings, a, &mut out),
    }
}
