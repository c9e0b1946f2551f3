//! saibench: structural-interpretation benchmarking for scientific-ML
//! models from the command line.
//!
//! Subcommands: `gen` (toy datasets), `slice` (problem-space partitions),
//! `eval` (one-shot metric evaluation), `sweep` (declarative experiment
//! grids), `trace` (metric correlation), `render` (SVG/CSV figures), and
//! `toy-serve` (toy predictors behind the external stdio protocol).
//!
//! Exit codes: 0 success, 2 usage or plan-validation error, 3 predictor
//! failure.

mod commands;
mod config;

use clap::{Parser, Subcommand};

use crate::config::CliConfig;

#[derive(Parser)]
#[command(
    name = "saibench",
    version,
    about = "Structural interpretation benchmarks for scientific-ML models"
)]
struct Cli {
    /// Config file (JSON); flags > SAIBENCH_* env vars > config > defaults.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory; no subcommand writes outside it.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker count for sweep cells.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Progress output: text or json (one JSON line per completed cell).
    #[arg(long, global = true)]
    format: Option<String>,
    /// Log level (error, warn, info, debug, trace).
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded toy datasets in the native file formats.
    Gen(commands::gen::GenArgs),
    /// Apply a slice spec to a dataset and write the selected ids.
    Slice(commands::slice::SliceArgs),
    /// Evaluate metrics once over a dataset and predictor.
    Eval(commands::eval::EvalArgs),
    /// Run a sweep plan.
    Sweep(commands::sweep::SweepArgs),
    /// Join per-sample reports and correlate metric pairs.
    Trace(commands::trace::TraceArgs),
    /// Render a report as a self-contained SVG plus CSV.
    Render(commands::render::RenderArgs),
    /// Serve a toy predictor over the external stdio protocol.
    ToyServe(commands::toy_serve::ToyServeArgs),
}

/// Exit code for plan-validation and usage errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit code when any predictor fails.
pub const EXIT_PREDICTOR: i32 = 3;

fn main() {
    let cli = Cli::parse();
    let cfg = match CliConfig::resolve(
        cli.config.as_deref(),
        cli.out.as_deref(),
        cli.workers,
        cli.format.as_deref(),
        cli.log_level.as_deref(),
    ) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_USAGE);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cfg.log_level)
        .format_timestamp(None)
        .init();
    let code = match cli.command {
        Command::Gen(args) => commands::gen::run(args, &cfg),
        Command::Slice(args) => commands::slice::run(args, &cfg),
        Command::Eval(args) => commands::eval::run(args, &cfg),
        Command::Sweep(args) => commands::sweep::run(args, &cfg),
        Command::Trace(args) => commands::trace::run(args, &cfg),
        Command::Render(args) => commands::render::run(args, &cfg),
        Command::ToyServe(args) => commands::toy_serve::run(args),
    };
    std::process::exit(code);
}
