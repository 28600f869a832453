//! `circlab`: batch experiments over small circuits, generators, learners,
//! natural properties, games and bootstrapping.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{
    BootstrapArgs, CompressArgs, CountingArgs, GameArgs, LearnArgs, McspArgs, NaturalArgs, NwArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// A reconstruction or bootstrap that ran but did not meet its contract.
    #[error("contract failure: {0}")]
    Contract(String),
    #[error("{0}")]
    Structural(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Contract(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "circlab", version, about = "Small-circuit and learning experiments")]
struct Cli {
    /// TOML file with top-level `seed`, `threads`, `out` and one table per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every randomized step derives its seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for the JSON and CSV reports.
    #[arg(long, global = true, env = "CIRCLAB_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimum circuit size of every table of a small arity.
    Mcsp(McspArgs),
    /// Function counts per size bound, and optionally random-function hardness.
    Counting(CountingArgs),
    /// Samples from the NW generator over a base function.
    Nw(NwArgs),
    /// Learner-based distinguishing, or reconstruction from a distinguisher.
    Learn(LearnArgs),
    /// Exact or average-case compression of random DNFs via a learner.
    Compress(CompressArgs),
    /// Density and usefulness of natural properties and their transforms.
    Natural(NaturalArgs),
    /// Value and small-support strategies of the function/probe game.
    Game(GameArgs),
    /// Learner-to-decider bootstrap on a self-reducible family.
    Bootstrap(BootstrapArgs),
}

pub struct Globals {
    pub seed: u64,
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(config::load).transpose()?;
    let top = |key: &str| file.as_ref().and_then(|f| f.get(key)).cloned();
    let seed = match cli.seed {
        Some(s) => s,
        None => match top("seed") {
            Some(v) => v.as_u64().ok_or_else(|| CliError::Usage("config seed must be an integer".into()))?,
            None => 1,
        },
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => top("threads").and_then(|v| v.as_u64()).map(|t| t as usize),
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))?;
    }
    let out = cli
        .out
        .or_else(|| top("out").and_then(|v| v.as_str().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("circlab-out"));
    let globals = Globals { seed, out };
    let section = |name: &str| file.as_ref().and_then(|f| f.get(name));

    let report = match &cli.command {
        Command::Mcsp(a) => commands::mcsp(&config::merge(a, section("mcsp"))?, &globals)?,
        Command::Counting(a) => commands::counting(&config::merge(a, section("counting"))?, &globals)?,
        Command::Nw(a) => commands::nw(&config::merge(a, section("nw"))?, &globals)?,
        Command::Learn(a) => commands::learn(&config::merge(a, section("learn"))?, &globals)?,
        Command::Compress(a) => commands::compress(&config::merge(a, section("compress"))?, &globals)?,
        Command::Natural(a) => commands::natural(&config::merge(a, section("natural"))?, &globals)?,
        Command::Game(a) => commands::game(&config::merge(a, section("game"))?, &globals)?,
        Command::Bootstrap(a) => commands::bootstrap(&config::merge(a, section("bootstrap"))?, &globals)?,
    };
    let (report, failure) = report;
    let written = report.write(&globals.out)?;
    println!("wrote {} and {}", written.json.display(), written.csv.display());
    println!("report sha256 {}", written.sha256);
    match failure {
        Some(why) => Err(CliError::Contract(why)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
