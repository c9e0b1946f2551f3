//! `saibench trace`: join reports on sample id and correlate metrics.

use clap::Args;
use saibench_core::harness::render::render_scatter;
use saibench_core::harness::trace_errors;
use saibench_core::report::{canonical_json, read_report, write_atomic, MetricReport};

use crate::commands::plan_exit_code;
use crate::config::{CliConfig, OutputFormat};
use crate::EXIT_USAGE;

#[derive(Args)]
pub struct TraceArgs {
    /// Report files to join (two or more recommended).
    #[arg(long, num_args = 1.., required = true)]
    reports: Vec<String>,
    /// Column pairs to correlate, as x:y indices (default: all pairs).
    #[arg(long, num_args = 0..)]
    pairs: Vec<String>,
}

pub fn run(args: TraceArgs, cfg: &CliConfig) -> i32 {
    let loaded: Result<Vec<MetricReport>, _> = args.reports.iter().map(read_report).collect();
    let loaded = match loaded {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let refs: Vec<&MetricReport> = loaded.iter().collect();
    let joins: Vec<(usize, usize)> = if args.pairs.is_empty() {
        let mut all = Vec::new();
        for x in 0..refs.len() {
            for y in (x + 1)..refs.len() {
                all.push((x, y));
            }
        }
        if all.is_empty() {
            vec![(0, 0)]
        } else {
            all
        }
    } else {
        let mut joins = Vec::new();
        for raw in &args.pairs {
            let Some((x, y)) = raw.split_once(':') else {
                eprintln!("error: bad pair {raw:?}, expected x:y");
                return EXIT_USAGE;
            };
            match (x.parse(), y.parse()) {
                (Ok(x), Ok(y)) => joins.push((x, y)),
                _ => {
                    eprintln!("error: bad pair {raw:?}, expected integer indices");
                    return EXIT_USAGE;
                }
            }
        }
        joins
    };
    match trace_errors(&refs, &joins) {
        Ok(out) => {
            if let Err(e) = std::fs::create_dir_all(&cfg.out_dir) {
                eprintln!("error: creating {}: {e}", cfg.out_dir.display());
                return 1;
            }
            let table_path = cfg.out_dir.join("trace_table.csv");
            if let Err(e) = write_atomic(&table_path, out.to_csv().as_bytes()) {
                eprintln!("error: writing {}: {e}", table_path.display());
                return 1;
            }
            let corr_path = cfg.out_dir.join("correlations.json");
            let body = canonical_json(&out.correlations).expect("correlations serialize");
            if let Err(e) = write_atomic(&corr_path, body.as_bytes()) {
                eprintln!("error: writing {}: {e}", corr_path.display());
                return 1;
            }
            for (fit, &(x, y)) in out.correlations.iter().zip(&joins) {
                let points = out.scatter(x, y);
                match render_scatter(&points, &fit.x_name, &fit.y_name, Some(fit)) {
                    Ok((svg, csv)) => {
                        let stem = format!("scatter_{}_{}", fit.x_name, fit.y_name);
                        let svg_path = cfg.out_dir.join(format!("{stem}.svg"));
                        let csv_path = cfg.out_dir.join(format!("{stem}.csv"));
                        if write_atomic(&svg_path, svg.as_bytes()).is_err()
                            || write_atomic(&csv_path, csv.as_bytes()).is_err()
                        {
                            eprintln!("error: writing scatter files for {stem}");
                            return 1;
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return 1;
                    }
                }
                match cfg.format {
                    OutputFormat::Json => println!(
                        "{}",
                        serde_json::json!({
                            "x": fit.x_name, "y": fit.y_name, "n": fit.n,
                            "pearson_r": fit.pearson_r, "slope": fit.slope, "intercept": fit.intercept,
                        })
                    ),
                    OutputFormat::Text => println!(
                        "{} vs {}: r = {:.4} (n = {}, y = {:.4} x + {:.4})",
                        fit.y_name, fit.x_name, fit.pearson_r, fit.n, fit.slope, fit.intercept
                    ),
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            plan_exit_code(&e)
        }
    }
}
