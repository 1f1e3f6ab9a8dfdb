//! `spad`: run episodes, compare schemes, build hotboot caches and solve
//! single pricing games from the command line.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "spad", version, about = "Reputation-gated pub/sub pricing simulator for vehicle fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode and write trace, per-slot, metrics and reputation CSVs.
    Run(RunArgs),
    /// Run several schemes over seeded repetitions and write the comparison CSV.
    Compare(CompareArgs),
    /// Build a warm-start cache for the learning pricing mode.
    Hotboot(HotbootArgs),
    /// Solve one leader/follower pricing game.
    SolveSe(SolveArgs),
}

/// Options shared by the simulation commands.
#[derive(Debug, Args)]
struct Common {
    /// `key = value` scenario config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Slots per episode; overrides the config.
    #[arg(long)]
    slots: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Scheme to run; overrides the config.
    #[arg(long)]
    scheme: Option<String>,
    /// Hotboot cache; switches SPAD to learning pricing warmed from it.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated schemes; all six when omitted.
    #[arg(long)]
    scheme: Option<String>,
    /// Seeded repetitions per scheme.
    #[arg(long, default_value_t = 10)]
    reps: usize,
}

#[derive(Debug, Args)]
struct HotbootArgs {
    #[command(flatten)]
    common: Common,
    /// Cache file to write; `<out>/hotboot.bin` when omitted.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Raw-part subscribers.
    #[arg(long)]
    j1: usize,
    /// Result-part subscribers.
    #[arg(long)]
    j2: usize,
    /// Satisfaction coefficient.
    #[arg(long)]
    alpha: f64,
    /// Raw-part cost parameter.
    #[arg(long)]
    eps1: f64,
    /// Result-part cost parameter.
    #[arg(long)]
    eps2: f64,
    /// Sensing capacity in [0,1].
    #[arg(long)]
    sc: f64,
    /// Processing capacity in [0,1].
    #[arg(long)]
    pc: f64,
    /// Content popularity.
    #[arg(long)]
    popularity: f64,
    /// Publisher reputation.
    #[arg(long)]
    reputation: f64,
    /// Price cap.
    #[arg(long, default_value_t = 5.0)]
    price_cap: f64,
    /// Cross-check against the brute-force grid oracle.
    #[arg(long)]
    verify: bool,
    /// Oracle grid size.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPAD_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Hotboot(a) => commands::hotboot(&a),
        Command::SolveSe(a) => commands::solve_se(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
