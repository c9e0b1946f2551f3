//! `saibench eval`: one-shot metric evaluation over a dataset.

use std::collections::BTreeMap;

use clap::Args;
use saibench_core::harness::{evaluate, MetricSpec, PlanWorkload};
use saibench_core::report::write_report;
use saibench_core::sampling::SliceSpec;

use crate::commands::{eval_exit_code, parse_predictor};
use crate::config::{CliConfig, OutputFormat};
use crate::EXIT_USAGE;

#[derive(Args)]
pub struct EvalArgs {
    /// Workload of the dataset: md, jet, or precip.
    #[arg(long)]
    workload: String,
    #[arg(long)]
    dataset: String,
    /// Predictor: knn | tagger | advect[:noise=A][:relative] | file:PATH | JSON.
    #[arg(long)]
    predictor: String,
    /// Comma-separated metric names.
    #[arg(long)]
    metrics: String,
    /// Metric params as JSON, e.g. {"csi":{"threshold":32}}.
    #[arg(long)]
    metric_params: Option<String>,
    /// Train slice spec (JSON); workload default otherwise.
    #[arg(long)]
    train_slice: Option<String>,
    /// Test slice spec (JSON); workload default otherwise.
    #[arg(long)]
    test_slice: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn run(args: EvalArgs, cfg: &CliConfig) -> i32 {
    let workload = match args.workload.as_str() {
        "md" => PlanWorkload::Md,
        "jet" => PlanWorkload::Jet,
        "precip" => PlanWorkload::Precip,
        other => {
            eprintln!("error: unknown workload {other:?}");
            return EXIT_USAGE;
        }
    };
    let predictor = match parse_predictor(&args.predictor) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let param_map: BTreeMap<String, BTreeMap<String, serde_json::Value>> = match &args.metric_params
    {
        Some(raw) => match serde_json::from_str(raw) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: bad metric params: {e}");
                return EXIT_USAGE;
            }
        },
        None => BTreeMap::new(),
    };
    let metric_specs: Vec<MetricSpec> = args
        .metrics
        .split(',')
        .map(|name| MetricSpec {
            name: name.trim().to_string(),
            params: param_map.get(name.trim()).cloned().unwrap_or_default(),
        })
        .collect();
    let parse_slice = |raw: &Option<String>| -> Result<Option<SliceSpec>, String> {
        match raw {
            Some(s) => serde_json::from_str(s).map(Some).map_err(|e| e.to_string()),
            None => Ok(None),
        }
    };
    let (train_slice, test_slice) = match (
        parse_slice(&args.train_slice),
        parse_slice(&args.test_slice),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: bad slice spec: {e}");
            return EXIT_USAGE;
        }
    };
    match evaluate(
        workload,
        &args.dataset,
        &predictor,
        &metric_specs,
        train_slice,
        test_slice,
        args.seed,
    ) {
        Ok(reports) => {
            for (name, report) in &reports {
                let path = cfg.out_dir.join(format!("{name}.json"));
                if let Err(e) = write_report(report, &path) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return 1;
                }
                match cfg.format {
                    OutputFormat::Json => {
                        let mean = report.aggregates.as_ref().map(|a| a.mean);
                        println!(
                            "{}",
                            serde_json::json!({"metric": name, "path": path.display().to_string(), "mean": mean})
                        );
                    }
                    OutputFormat::Text => println!("{} -> {}", name, path.display()),
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            eval_exit_code(&e)
        }
    }
}
