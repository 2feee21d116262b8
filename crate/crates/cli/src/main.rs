//! Command-line driver: simulate scenes, reconstruct reflection points,
//! paint absorbing obstacles and reproduce the built-in tables.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "brokenray",
    version,
    about = "Broken-ray reconstruction of moving obstacles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace every transmitter's emission grid and write data points, lost
    /// rays, ground truth and the event log per interval.
    Simulate(Run),
    /// Reconstruct reflection points from data point CSVs.
    Reconstruct(Run),
    /// Paint voxel images from data points and lost rays.
    Paint(Run),
    /// Run the two built-in table scenarios.
    Tables(Run),
    /// Simulate, reconstruct and compare with ground truth.
    Roundtrip(Run),
}

#[derive(Args, Debug, Clone)]
struct Run {
    /// Scene file (TOML).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Input: a data point CSV or a directory of interval_NNNN folders.
    /// Defaults to the output directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Time steps per travel time.
    #[arg(long = "n-r")]
    n_r: Option<usize>,
    /// Position tolerance.
    #[arg(long)]
    eps1: Option<f64>,
    /// Time tolerance (defaults to two time steps).
    #[arg(long)]
    eps2: Option<f64>,
    /// Search angle grid, "PHIxTHETA".
    #[arg(long)]
    grid: Option<String>,
    /// Voxel grid, "NXxNYxNZ".
    #[arg(long)]
    voxels: Option<String>,
    /// Seed for random emission grids and generated scenes.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of generated round-trip scenes when no scene is given.
    #[arg(long, default_value_t = 20)]
    count: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Number formatting: two decimals or full precision.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Receiver)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Indexed)]
    method: MethodArg,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Table,
    Raw,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum StrategyArg {
    Receiver,
    Reflection,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Brute,
    Indexed,
}

type Handler = fn(&Run) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (cmd, args): (Handler, &Run) = match &cli.command {
        Command::Simulate(a) => (commands::simulate, a),
        Command::Reconstruct(a) => (commands::reconstruct, a),
        Command::Paint(a) => (commands::paint, a),
        Command::Tables(a) => (commands::tables, a),
        Command::Roundtrip(a) => (commands::roundtrip, a),
    };
    match args.workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| cmd(args)),
        None => cmd(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
