//! `saibench sweep`: run a sweep plan.

use clap::Args;
use saibench_core::harness::{run_plan_observed, CellStatus, SweepPlan};

use crate::commands::plan_exit_code;
use crate::config::{CliConfig, OutputFormat};
use crate::EXIT_PREDICTOR;

#[derive(Args)]
pub struct SweepArgs {
    /// Plan file (JSON).
    #[arg(long)]
    plan: String,
    /// Override the plan seed.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(args: SweepArgs, cfg: &CliConfig) -> i32 {
    let mut plan = match SweepPlan::from_path(&args.plan) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("error: {e}");
            return plan_exit_code(&e);
        }
    };
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    let out_dir = match (&plan.output_dir, cfg.out_dir_explicit) {
        (Some(dir), false) => std::path::PathBuf::from(dir),
        _ => cfg.out_dir.clone(),
    };
    let format = cfg.format;
    let result = run_plan_observed(&plan, &out_dir, cfg.workers, |cell| match format {
        OutputFormat::Json => {
            let status = match &cell.status {
                CellStatus::Ok => "ok",
                CellStatus::Failed { .. } => "failed",
            };
            let error = match &cell.status {
                CellStatus::Failed { error } => Some(error.clone()),
                CellStatus::Ok => None,
            };
            println!(
                "{}",
                serde_json::json!({
                    "cell": cell.index,
                    "coords": cell.coords,
                    "status": status,
                    "error": error,
                    "cached": cell.cached,
                    "wall_time_ms": cell.wall_time_ms,
                })
            );
        }
        OutputFormat::Text => {
            let status = match &cell.status {
                CellStatus::Ok if cell.cached => "cached".to_string(),
                CellStatus::Ok => "ok".to_string(),
                CellStatus::Failed { error } => format!("failed: {error}"),
            };
            println!(
                "cell {} {} [{} ms] {}",
                cell.index, cell.coords, cell.wall_time_ms, status
            );
        }
    });
    match result {
        Ok(result) => {
            let failed = result.failed_cells();
            if format == OutputFormat::Text {
                println!(
                    "plan {} ({} cells, {} failed) -> {}",
                    result.plan_id,
                    result.cells.len(),
                    failed,
                    result.out_dir.display()
                );
            }
            if failed > 0 {
                EXIT_PREDICTOR
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            plan_exit_code(&e)
        }
    }
}
