pub mod eval;
pub mod gen;
pub mod render;
pub mod slice;
pub mod sweep;
pub mod toy_serve;
pub mod trace;

use saibench_core::error::PlanError;
use saibench_core::harness::{PredictorSpec, ToyPredictorSpec};

use crate::{EXIT_PREDICTOR, EXIT_USAGE};

/// Map a plan error to the documented exit codes.
pub fn plan_exit_code(e: &PlanError) -> i32 {
    match e {
        PlanError::Invalid(_)
        | PlanError::UnknownMetric(_)
        | PlanError::Parse { .. }
        | PlanError::Unrenderable { .. } => EXIT_USAGE,
        _ => 1,
    }
}

/// Parse a predictor given either shorthand or a JSON spec.
///
/// Shorthands: `knn`, `tagger`, `advect`, `advect:noise=0.2`,
/// `advect:noise=0.2:relative`, `file:predictions.json`. Anything
/// starting with `{` parses as PredictorSpec JSON.
pub fn parse_predictor(s: &str) -> Result<PredictorSpec, String> {
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    if let Some(path) = s.strip_prefix("file:") {
        return Ok(PredictorSpec::File {
            path: path.to_string(),
        });
    }
    let mut parts = s.split(':');
    match parts.next() {
        Some("knn") => Ok(PredictorSpec::Toy(ToyPredictorSpec::KnnForces { descriptor: None })),
        Some("tagger") => Ok(PredictorSpec::Toy(ToyPredictorSpec::LinearTagger)),
        Some("advect") => {
            let mut noise_amp = 0.0;
            let mut relative_noise = false;
            for part in parts {
                if let Some(v) = part.strip_prefix("noise=") {
                    noise_amp = v.parse().map_err(|_| format!("bad noise amplitude {v:?}"))?;
                } else if part == "relative" {
                    relative_noise = true;
                } else {
                    return Err(format!("unknown advect option {part:?}"));
                }
            }
            Ok(PredictorSpec::Toy(ToyPredictorSpec::AdvectionExtrapolator {
                noise_amp,
                relative_noise,
            }))
        }
        other => Err(format!(
            "unknown predictor {other:?}; use knn, tagger, advect[:noise=A][:relative], file:PATH, or JSON"
        )),
    }
}

/// `EXIT_PREDICTOR` when the error came from a predictor process.
pub fn eval_exit_code(e: &PlanError) -> i32 {
    let msg = e.to_string();
    if msg.contains("predictor") || msg.contains("spawn") {
        EXIT_PREDICTOR
    } else {
        plan_exit_code(e)
    }
}
