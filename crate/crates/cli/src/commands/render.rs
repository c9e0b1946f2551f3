//! `saibench render`: SVG + CSV figures from report files.

use clap::Args;
use saibench_core::harness::render::{render_report, RenderKind};
use saibench_core::report::{read_report, write_atomic};

use crate::commands::plan_exit_code;
use crate::config::CliConfig;
use crate::EXIT_USAGE;

#[derive(Args)]
pub struct RenderArgs {
    /// Report file to render.
    #[arg(long)]
    input: String,
    /// histogram | scatter | line | grid-heatmap.
    #[arg(long)]
    kind: String,
}

pub fn run(args: RenderArgs, cfg: &CliConfig) -> i32 {
    let Some(kind) = RenderKind::parse(&args.kind) else {
        eprintln!(
            "error: unknown kind {:?}; use histogram, scatter, line, or grid-heatmap",
            args.kind
        );
        return EXIT_USAGE;
    };
    let report = match read_report(&args.input) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match render_report(&report, kind) {
        Ok((svg, csv)) => {
            let stem = std::path::Path::new(&args.input)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("report")
                .to_string();
            let svg_path = cfg.out_dir.join(format!("{stem}_{}.svg", args.kind));
            let csv_path = cfg.out_dir.join(format!("{stem}_{}.csv", args.kind));
            if let Err(e) = write_atomic(&svg_path, svg.as_bytes()) {
                eprintln!("error: writing {}: {e}", svg_path.display());
                return 1;
            }
            if let Err(e) = write_atomic(&csv_path, csv.as_bytes()) {
                eprintln!("error: writing {}: {e}", csv_path.display());
                return 1;
            }
            println!("{}", svg_path.display());
            println!("{}", csv_path.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            plan_exit_code(&e)
        }
    }
}
