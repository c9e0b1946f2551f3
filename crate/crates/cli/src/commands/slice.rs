//! `saibench slice`: materialize one slice spec against a dataset.

use clap::Args;
use saibench_core::harness::{slice_dataset, PlanWorkload};
use saibench_core::report::{canonical_json, write_atomic};
use saibench_core::sampling::SliceSpec;

use crate::commands::plan_exit_code;
use crate::config::CliConfig;
use crate::EXIT_USAGE;

#[derive(Args)]
pub struct SliceArgs {
    /// Workload of the dataset: md, jet, or precip.
    #[arg(long)]
    workload: String,
    /// Dataset path (trajectory/jet JSONL or precip manifest).
    #[arg(long)]
    dataset: String,
    /// Slice spec as JSON, e.g. {"kind":"time_window","start_frac":0.0,"size_frac":0.9}.
    #[arg(long)]
    spec: String,
    /// Output file name inside --out.
    #[arg(long, default_value = "slice.json")]
    name: String,
}

fn parse_workload(s: &str) -> Option<PlanWorkload> {
    match s {
        "md" => Some(PlanWorkload::Md),
        "jet" => Some(PlanWorkload::Jet),
        "precip" => Some(PlanWorkload::Precip),
        _ => None,
    }
}

pub fn run(args: SliceArgs, cfg: &CliConfig) -> i32 {
    let Some(workload) = parse_workload(&args.workload) else {
        eprintln!(
            "error: unknown workload {:?}; use md, jet, or precip",
            args.workload
        );
        return EXIT_USAGE;
    };
    let spec: SliceSpec = match serde_json::from_str(&args.spec) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: bad slice spec: {e}");
            return EXIT_USAGE;
        }
    };
    match slice_dataset(workload, &args.dataset, &spec) {
        Ok(result) => {
            let path = cfg.out_dir.join(&args.name);
            let body = canonical_json(&result).expect("slice result serializes");
            if let Err(e) = write_atomic(&path, body.as_bytes()) {
                eprintln!("error: writing {}: {e}", path.display());
                return 1;
            }
            println!("{} ({} ids)", path.display(), result.sample_ids.len());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            plan_exit_code(&e)
        }
    }
}
