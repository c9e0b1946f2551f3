//! Sweep execution: expand a plan into cells, run them (optionally in
//! parallel), and write one report per (cell, metric) plus a manifest.
//!
//! Cells are independent and resumable: a cell whose report files all
//! exist and parse is skipped, and rerunning a completed plan rewrites
//! nothing, byte for byte. Failed cells are recorded in the manifest
//! with their error and never abort the sweep.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::{JetDataset, PrecipEvent, PredictionSet, Trajectory};
use crate::error::PlanError;
use crate::harness::external::{run_external_predictor, PredictInput, PredictRequest};
use crate::harness::plan::{
    MetricSpec, PlanWorkload, PredictorSpec, SweepAxis, SweepPlan, ToyPredictorSpec,
};
use crate::io;
use crate::metrics;
use crate::report::{canonical_json, read_report, write_atomic, write_report, MetricReport};
use crate::rng::derive_seed;
use crate::sampling::{self, SliceSpec, SubsetSize};
use crate::synth::{AdvectionExtrapolator, KnnForcePredictor, LinearTagger};
use crate::transforms::rotate_event;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed { error: String },
}

/// Outcome of one cell. `cached` and `wall_time_ms` are runtime-only;
/// the on-disk manifest stores just index, coords, status, and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub index: usize,
    pub coords: serde_json::Value,
    pub status: CellStatus,
    /// Metric name -> report file name (relative to the output dir).
    pub reports: BTreeMap<String, String>,
    pub cached: bool,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub plan_id: String,
    pub plan_hash: String,
    pub out_dir: PathBuf,
    pub cells: Vec<CellOutcome>,
}

impl SweepResult {
    pub fn failed_cells(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c.status, CellStatus::Failed { .. }))
            .count()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestCell {
    index: usize,
    coords: serde_json::Value,
    #[serde(flatten)]
    status: CellStatus,
    reports: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    plan_id: String,
    plan_hash: String,
    cells: Vec<ManifestCell>,
}

enum WorkloadData {
    Md(Trajectory),
    Jet(JetDataset),
    Precip(Vec<PrecipEvent>),
}

impl WorkloadData {
    fn load(plan: &SweepPlan) -> Result<Self, PlanError> {
        let path = &plan.datasets["main"].path;
        let wrap = |e: crate::error::LoadError| PlanError::Dataset("main".into(), e.to_string());
        Ok(match plan.workload {
            PlanWorkload::Md => WorkloadData::Md(io::load_trajectory(path).map_err(wrap)?),
            PlanWorkload::Jet => WorkloadData::Jet(io::load_jet_dataset(path).map_err(wrap)?),
            PlanWorkload::Precip => {
                WorkloadData::Precip(io::load_precip_dataset(path).map_err(wrap)?)
            }
        })
    }

    fn all_ids(&self) -> Vec<i64> {
        match self {
            WorkloadData::Md(t) => t.ids(),
            WorkloadData::Jet(d) => d.ids(),
            WorkloadData::Precip(events) => events.iter().map(|e| e.event_id).collect(),
        }
    }
}

/// Fractional rank window over an id-sorted sample list; the md window
/// rule generalized to any id-keyed dataset.
fn rank_window(ids: &[i64], start_frac: f64, size_frac: f64) -> Result<Vec<i64>, String> {
    let m = ids.len();
    let lo = ((start_frac * m as f64) + 1e-9).floor() as usize;
    let hi = (((start_frac + size_frac) * m as f64) + 1e-9).floor() as usize;
    let (lo, hi) = (lo.min(m), hi.min(m));
    if lo >= hi {
        return Err(format!(
            "window [{start_frac}, +{size_frac}) selects zero samples"
        ));
    }
    Ok(ids[lo..hi].to_vec())
}

fn apply_slice(data: &WorkloadData, all_ids: &[i64], spec: &SliceSpec) -> Result<Vec<i64>, String> {
    match spec {
        SliceSpec::TimeWindow {
            start_frac,
            size_frac,
        } => rank_window(all_ids, *start_frac, *size_frac),
        SliceSpec::RandomSubset {
            count,
            fraction,
            seed,
        } => {
            let size = match (count, fraction) {
                (Some(c), _) => SubsetSize::Count(*c),
                (None, Some(f)) => SubsetSize::Fraction(*f),
                _ => return Err("random_subset needs count or fraction".into()),
            };
            sampling::random_subsample(all_ids, size, *seed)
                .map(|s| s.sample_ids)
                .map_err(|e| e.to_string())
        }
        SliceSpec::FeatureBins {
            feature,
            lo,
            hi,
            n_bins,
            selected,
        } => {
            let values = feature_values(data, all_ids, feature)?;
            let binned = sampling::bin_by_scalar(feature, &values, *lo, *hi, *n_bins)
                .map_err(|e| e.to_string())?;
            let mut ids: Vec<i64> = selected
                .iter()
                .flat_map(|&k| binned.bin(k).to_vec())
                .collect();
            ids.sort_unstable();
            Ok(ids)
        }
        SliceSpec::ThresholdResponsive { .. } => {
            Err("threshold_responsive slices need predictions; use the cucsi metric instead".into())
        }
    }
}

fn feature_values(
    data: &WorkloadData,
    ids: &[i64],
    feature: &str,
) -> Result<Vec<(i64, f64)>, String> {
    match data {
        WorkloadData::Jet(ds) => ids
            .iter()
            .map(|&id| {
                let ev = ds.get(id).ok_or_else(|| format!("unknown event {id}"))?;
                let v = match feature {
                    "jet_energy" => ev.jet_energy(),
                    "n_particles" => ev.particles.len() as f64,
                    other => return Err(format!("unknown jet feature {other:?}")),
                };
                Ok((id, v))
            })
            .collect(),
        _ => Err(format!("feature {feature:?} only applies to jet datasets")),
    }
}

struct PreparedCell {
    index: usize,
    coords: serde_json::Value,
    seed: u64,
    train_ids: Vec<i64>,
    test_ids: Vec<i64>,
    angle_deg: Option<f64>,
}

fn default_train_slice(workload: PlanWorkload) -> Option<SliceSpec> {
    match workload {
        PlanWorkload::Md => Some(SliceSpec::TimeWindow {
            start_frac: 0.0,
            size_frac: 0.9,
        }),
        PlanWorkload::Jet => Some(SliceSpec::TimeWindow {
            start_frac: 0.0,
            size_frac: 0.8,
        }),
        PlanWorkload::Precip => None,
    }
}

fn default_test_slice(workload: PlanWorkload) -> Option<SliceSpec> {
    match workload {
        PlanWorkload::Md => Some(SliceSpec::TimeWindow {
            start_frac: 0.9,
            size_frac: 0.1,
        }),
        PlanWorkload::Jet => Some(SliceSpec::TimeWindow {
            start_frac: 0.8,
            size_frac: 0.2,
        }),
        PlanWorkload::Precip => None,
    }
}

fn prepare_cells(plan: &SweepPlan, data: &WorkloadData) -> Result<Vec<PreparedCell>, PlanError> {
    let all_ids = data.all_ids();
    let invalid = |m: String| PlanError::Invalid(m);
    let train_pool = match plan
        .train_slice
        .clone()
        .or_else(|| default_train_slice(plan.workload))
    {
        Some(spec) => apply_slice(data, &all_ids, &spec).map_err(invalid)?,
        None => all_ids.clone(),
    };
    let test_ids = match plan
        .test_slice
        .clone()
        .or_else(|| default_test_slice(plan.workload))
    {
        Some(spec) => apply_slice(data, &all_ids, &spec).map_err(invalid)?,
        None => all_ids.clone(),
    };
    let mut cells = Vec::new();
    match &plan.axis {
        SweepAxis::SubsetSizes { sizes } => {
            for (index, &size) in sizes.iter().enumerate() {
                let seed = derive_seed(plan.seed, index as u64);
                let train = sampling::random_subsample(&train_pool, SubsetSize::Count(size), seed)
                    .map_err(|e| invalid(e.to_string()))?;
                cells.push(PreparedCell {
                    index,
                    coords: serde_json::json!({ "size": size }),
                    seed,
                    train_ids: train.sample_ids,
                    test_ids: test_ids.clone(),
                    angle_deg: None,
                });
            }
        }
        SweepAxis::WindowGrid {
            sizes,
            starts,
            max_end,
            sample_count,
        } => {
            let windows = sampling::window_grid(sizes, starts, *max_end)?;
            for (index, window) in windows.iter().enumerate() {
                let seed = derive_seed(plan.seed, index as u64);
                let (start_frac, size_frac) = match window {
                    SliceSpec::TimeWindow {
                        start_frac,
                        size_frac,
                    } => (*start_frac, *size_frac),
                    _ => unreachable!("window_grid yields time windows"),
                };
                let mut train_ids = apply_slice(data, &all_ids, window).map_err(invalid)?;
                if let Some(count) = sample_count {
                    train_ids =
                        sampling::random_subsample(&train_ids, SubsetSize::Count(*count), seed)
                            .map_err(|e| invalid(e.to_string()))?
                            .sample_ids;
                }
                cells.push(PreparedCell {
                    index,
                    coords: serde_json::json!({ "start_frac": start_frac, "size_frac": size_frac }),
                    seed,
                    train_ids,
                    test_ids: test_ids.clone(),
                    angle_deg: None,
                });
            }
        }
        SweepAxis::RotationAngles { step_deg, count } => {
            for index in 0..*count {
                let angle = step_deg * index as f64;
                cells.push(PreparedCell {
                    index,
                    coords: serde_json::json!({ "angle_deg": angle }),
                    seed: derive_seed(plan.seed, index as u64),
                    train_ids: train_pool.clone(),
                    test_ids: test_ids.clone(),
                    angle_deg: Some(angle),
                });
            }
        }
        SweepAxis::BinSweep {
            feature,
            lo,
            hi,
            n_bins,
            groups,
            train_total,
        } => {
            let train_values = feature_values(data, &train_pool, feature).map_err(invalid)?;
            let train_bins = sampling::bin_by_scalar(feature, &train_values, *lo, *hi, *n_bins)?;
            let test_values = feature_values(data, &test_ids, feature).map_err(invalid)?;
            let test_bins = sampling::bin_by_scalar(feature, &test_values, *lo, *hi, *n_bins)?;
            let mut index = 0;
            for (gi, group) in groups.iter().enumerate() {
                // One training draw per group, shared by all its test bins.
                let train = sampling::equalized_bin_sample(
                    &train_bins,
                    group,
                    *train_total,
                    derive_seed(plan.seed, gi as u64),
                )?;
                for test_bin in 0..*n_bins {
                    cells.push(PreparedCell {
                        index,
                        coords: serde_json::json!({ "group": gi, "train_bins": group, "test_bin": test_bin }),
                        seed: derive_seed(plan.seed, gi as u64),
                        train_ids: train.sample_ids.clone(),
                        test_ids: test_bins.bin(test_bin).to_vec(),
                        angle_deg: None,
                    });
                    index += 1;
                }
            }
        }
        SweepAxis::Repetitions { runs } => {
            for index in 0..*runs {
                cells.push(PreparedCell {
                    index,
                    coords: serde_json::json!({ "run": index }),
                    seed: derive_seed(plan.seed, index as u64),
                    train_ids: Vec::new(),
                    test_ids: test_ids.clone(),
                    angle_deg: None,
                });
            }
        }
    }
    Ok(cells)
}

fn substitute_command(command: &[String], cell: &PreparedCell) -> Vec<String> {
    command
        .iter()
        .map(|arg| {
            arg.replace("{cell_index}", &cell.index.to_string())
                .replace("{cell_seed}", &cell.seed.to_string())
        })
        .collect()
}

fn param_f64(spec: &MetricSpec, key: &str, default: f64) -> f64 {
    spec.params
        .get(key)
        .and_then(|v| v.as_f64())
        .unwrap_or(default)
}

fn param_usize(spec: &MetricSpec, key: &str) -> Option<usize> {
    spec.params
        .get(key)
        .and_then(|v| v.as_u64())
        .map(|v| v as usize)
}

// ---------------------------------------------------------------------------
// Per-workload cell execution

fn md_predictions(
    plan: &SweepPlan,
    traj: &Trajectory,
    cell: &PreparedCell,
    file_preds: Option<&PredictionSet>,
) -> Result<PredictionSet, String> {
    match &plan.predictor {
        PredictorSpec::Toy(ToyPredictorSpec::KnnForces { descriptor }) => {
            let params = descriptor.unwrap_or_default();
            let knn = KnnForcePredictor::fit(traj, &cell.train_ids, &params)
                .map_err(|e| e.to_string())?;
            knn.predict(traj, &cell.test_ids).map_err(|e| e.to_string())
        }
        PredictorSpec::External {
            command,
            timeout_secs,
        } => {
            let requests: Vec<PredictRequest> = cell
                .test_ids
                .iter()
                .map(|&id| {
                    let f = traj
                        .frame_by_time(id)
                        .ok_or_else(|| format!("unknown frame {id}"))?;
                    Ok(PredictRequest {
                        id,
                        input: PredictInput::Molecular {
                            species: f.species.clone(),
                            positions: f.positions.clone(),
                        },
                    })
                })
                .collect::<Result<_, String>>()?;
            run_external_predictor(
                &substitute_command(command, cell),
                plan.workload,
                &requests,
                Duration::from_secs(*timeout_secs),
            )
            .map_err(|e| e.to_string())
        }
        PredictorSpec::File { .. } => Ok(file_preds.expect("file predictions preloaded").clone()),
        _ => Err("predictor not applicable to md".into()),
    }
}

fn md_reports(
    plan: &SweepPlan,
    traj: &Trajectory,
    cell: &PreparedCell,
    file_preds: Option<&PredictionSet>,
) -> Result<BTreeMap<String, MetricReport>, String> {
    let preds = md_predictions(plan, traj, cell, file_preds)?;
    let frames = metrics::frames_by_ids(traj, &cell.test_ids).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for spec in &plan.metrics {
        let report = match spec.name.as_str() {
            "force_mae" => {
                let group = spec
                    .params
                    .get("group_by_species")
                    .and_then(|v| v.as_bool())
                    .unwrap_or(true);
                metrics::force_mae(&frames, &preds, group).map_err(|e| e.to_string())?
            }
            "energy_error" => {
                let per_atom = spec
                    .params
                    .get("per_atom")
                    .and_then(|v| v.as_bool())
                    .unwrap_or(false);
                metrics::energy_error_series(&frames, &preds, per_atom)
                    .map_err(|e| e.to_string())?
            }
            "error_scatter" => {
                let pairs = metrics::error_scatter(&frames, &preds).map_err(|e| e.to_string())?;
                let per_sample: BTreeMap<i64, Vec<f64>> = pairs
                    .into_iter()
                    .map(|(id, de, df)| (id, vec![de, df]))
                    .collect();
                MetricReport::from_per_sample("error_scatter", BTreeMap::new(), None, per_sample)
            }
            other => return Err(format!("unknown md metric {other:?}")),
        };
        out.insert(spec.name.clone(), report);
    }
    Ok(out)
}

fn jet_scores(
    plan: &SweepPlan,
    ds: &JetDataset,
    cell: &PreparedCell,
    file_preds: Option<&PredictionSet>,
) -> Result<Vec<(i64, f64, u8)>, String> {
    // Fixed plan transforms compose with the cell's sweep angle.
    let base_deg: f64 = plan
        .transforms
        .iter()
        .map(|t| match t {
            crate::harness::plan::TransformSpec::Rotate { angle_deg } => *angle_deg,
        })
        .sum();
    let total_deg = base_deg + cell.angle_deg.unwrap_or(0.0);
    let theta = (total_deg != 0.0).then(|| total_deg.to_radians());
    let test_event = |id: i64| -> Result<crate::data::JetEvent, String> {
        let ev = ds.get(id).ok_or_else(|| format!("unknown event {id}"))?;
        match theta {
            Some(t) => rotate_event(ev, t).map_err(|e| e.to_string()),
            None => Ok(ev.clone()),
        }
    };
    match &plan.predictor {
        PredictorSpec::Toy(ToyPredictorSpec::LinearTagger) => {
            let tagger = LinearTagger::fit(ds, &cell.train_ids).map_err(|e| e.to_string())?;
            cell.test_ids
                .iter()
                .map(|&id| {
                    let ev = test_event(id)?;
                    Ok((id, tagger.score(&ev).map_err(|e| e.to_string())?, ev.label))
                })
                .collect()
        }
        PredictorSpec::External {
            command,
            timeout_secs,
        } => {
            let mut labels = BTreeMap::new();
            let requests: Vec<PredictRequest> = cell
                .test_ids
                .iter()
                .map(|&id| {
                    let ev = test_event(id)?;
                    labels.insert(id, ev.label);
                    Ok(PredictRequest {
                        id,
                        input: PredictInput::Jet {
                            particles: ev.particles.clone(),
                        },
                    })
                })
                .collect::<Result<_, String>>()?;
            let preds = run_external_predictor(
                &substitute_command(command, cell),
                plan.workload,
                &requests,
                Duration::from_secs(*timeout_secs),
            )
            .map_err(|e| e.to_string())?;
            cell.test_ids
                .iter()
                .map(|&id| {
                    let score = preds
                        .get(id)
                        .map_err(|e| e.to_string())?
                        .signal_score()
                        .ok_or_else(|| format!("prediction for {id} is not class scores"))?;
                    Ok((id, score, labels[&id]))
                })
                .collect()
        }
        PredictorSpec::File { .. } => {
            let preds = file_preds.expect("file predictions preloaded");
            cell.test_ids
                .iter()
                .map(|&id| {
                    let ev = ds.get(id).ok_or_else(|| format!("unknown event {id}"))?;
                    let score = preds
                        .get(id)
                        .map_err(|e| e.to_string())?
                        .signal_score()
                        .ok_or_else(|| format!("prediction for {id} is not class scores"))?;
                    Ok((id, score, ev.label))
                })
                .collect()
        }
        _ => Err("predictor not applicable to jet".into()),
    }
}

fn jet_reports(
    plan: &SweepPlan,
    ds: &JetDataset,
    cell: &PreparedCell,
    file_preds: Option<&PredictionSet>,
) -> Result<BTreeMap<String, MetricReport>, String> {
    let samples = jet_scores(plan, ds, cell, file_preds)?;
    let mut out = BTreeMap::new();
    for spec in &plan.metrics {
        let report = match spec.name.as_str() {
            "accuracy" => metrics::classification_metrics(&samples).map_err(|e| e.to_string())?,
            "roc_auc" => {
                let pairs: Vec<(f64, u8)> = samples.iter().map(|&(_, s, l)| (s, l)).collect();
                let roc = metrics::roc_auc(&pairs).map_err(|e| e.to_string())?;
                let per_sample: BTreeMap<i64, Vec<f64>> = samples
                    .iter()
                    .map(|&(id, s, l)| (id, vec![s, f64::from(l)]))
                    .collect();
                let mut report =
                    MetricReport::from_per_sample("roc_auc", BTreeMap::new(), None, per_sample);
                report.set_param("auc", roc.auc);
                report.set_param("n_points", roc.points.len());
                report
            }
            other => return Err(format!("unknown jet metric {other:?}")),
        };
        out.insert(spec.name.clone(), report);
    }
    Ok(out)
}

fn precip_predictions(
    plan: &SweepPlan,
    events: &[&PrecipEvent],
    cell: &PreparedCell,
    file_preds: Option<&PredictionSet>,
) -> Result<PredictionSet, String> {
    match &plan.predictor {
        PredictorSpec::Toy(ToyPredictorSpec::AdvectionExtrapolator {
            noise_amp,
            relative_noise,
        }) => {
            let model = AdvectionExtrapolator {
                noise_amp: *noise_amp,
                relative_noise: *relative_noise,
            };
            let owned: Vec<PrecipEvent> = events.iter().map(|e| (*e).clone()).collect();
            model.predict(&owned, cell.seed).map_err(|e| e.to_string())
        }
        PredictorSpec::External {
            command,
            timeout_secs,
        } => {
            let requests: Vec<PredictRequest> = events
                .iter()
                .map(|ev| PredictRequest {
                    id: ev.event_id,
                    input: PredictInput::Precip {
                        frames: ev.input_frames().to_vec(),
                    },
                })
                .collect();
            run_external_predictor(
                &substitute_command(command, cell),
                plan.workload,
                &requests,
                Duration::from_secs(*timeout_secs),
            )
            .map_err(|e| e.to_string())
        }
        PredictorSpec::File { .. } => Ok(file_preds.expect("file predictions preloaded").clone()),
        _ => Err("predictor not applicable to precip".into()),
    }
}

fn precip_reports(
    plan: &SweepPlan,
    all_events: &[PrecipEvent],
    cell: &PreparedCell,
    file_preds: Option<&PredictionSet>,
) -> Result<BTreeMap<String, MetricReport>, String> {
    let by_id: BTreeMap<i64, &PrecipEvent> = all_events.iter().map(|e| (e.event_id, e)).collect();
    let events: Vec<&PrecipEvent> = cell
        .test_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| format!("unknown event {id}"))
        })
        .collect::<Result<_, String>>()?;
    let preds = precip_predictions(plan, &events, cell, file_preds)?;
    let mut out = BTreeMap::new();
    for spec in &plan.metrics {
        out.insert(spec.name.clone(), precip_metric(spec, &events, &preds)?);
    }
    Ok(out)
}

/// Per-event value for one precipitation metric; `lead` restricts to one
/// forecast lead, otherwise values average over all leads.
fn precip_metric(
    spec: &MetricSpec,
    events: &[&PrecipEvent],
    preds: &PredictionSet,
) -> Result<MetricReport, String> {
    let lead_param = param_usize(spec, "lead");
    let mut per_sample: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut params: BTreeMap<String, serde_json::Value> = spec.params.clone();
    match spec.name.as_str() {
        "cucsi" => {
            let threshold = param_f64(spec, "threshold", 16.0);
            let n_bins = param_usize(spec, "n_bins").unwrap_or(30);
            let step = param_f64(spec, "step", 0.015);
            let owned: Vec<PrecipEvent> = events.iter().map(|e| (*e).clone()).collect();
            let grid = metrics::cucsi(&owned, preds, threshold, n_bins, step)
                .map_err(|e| e.to_string())?;
            for ev in events {
                let frames = preds.validate_frames_for(ev).map_err(|e| e.to_string())?;
                if sampling::event_is_responsive(ev, frames, threshold) {
                    let scores: Vec<f64> = (0..ev.output_len())
                        .map(|lead| {
                            metrics::csi(ev.output_frame(lead), &frames[lead], threshold)
                                .map_err(|e| e.to_string())
                                .map(|v| v.expect("responsive lead"))
                        })
                        .collect::<Result<_, String>>()?;
                    per_sample.insert(ev.event_id, scores);
                }
            }
            params.insert("threshold".into(), threshold.into());
            params.insert("n_bins".into(), n_bins.into());
            params.insert("step".into(), step.into());
            params.insert(
                "grid".into(),
                serde_json::to_value(&grid).map_err(|e| e.to_string())?,
            );
            params.insert("considered".into(), grid.considered.into());
        }
        name => {
            for ev in events {
                let frames = preds.validate_frames_for(ev).map_err(|e| e.to_string())?;
                let leads: Vec<usize> = match lead_param {
                    Some(lead) if lead < ev.output_len() => vec![lead],
                    Some(lead) => {
                        return Err(format!(
                            "lead {lead} out of range for event {}",
                            ev.event_id
                        ))
                    }
                    None => (0..ev.output_len()).collect(),
                };
                let value: Option<Vec<f64>> = match name {
                    "mae" => {
                        let mut sum = 0.0;
                        for &lead in &leads {
                            sum += metrics::raw_mae(ev.output_frame(lead), &frames[lead])
                                .map_err(|e| e.to_string())?;
                        }
                        Some(vec![sum / leads.len() as f64])
                    }
                    "active_area_mae" => {
                        let t = param_f64(spec, "threshold", 5.0);
                        params.insert("threshold".into(), t.into());
                        let mut vals = Vec::new();
                        for &lead in &leads {
                            if let Some(v) =
                                metrics::active_area_mae(ev.output_frame(lead), &frames[lead], t)
                                    .map_err(|e| e.to_string())?
                            {
                                vals.push(v);
                            }
                        }
                        (!vals.is_empty())
                            .then(|| vec![vals.iter().sum::<f64>() / vals.len() as f64])
                    }
                    "csi" => {
                        let t = param_f64(spec, "threshold", 16.0);
                        params.insert("threshold".into(), t.into());
                        let mut vals = Vec::new();
                        for &lead in &leads {
                            if let Some(v) = metrics::csi(ev.output_frame(lead), &frames[lead], t)
                                .map_err(|e| e.to_string())?
                            {
                                vals.push(v);
                            }
                        }
                        (!vals.is_empty())
                            .then(|| vec![vals.iter().sum::<f64>() / vals.len() as f64])
                    }
                    "csi_avg" => {
                        let mut vals = Vec::new();
                        for &lead in &leads {
                            if let Some(v) = metrics::csi_avg(ev.output_frame(lead), &frames[lead])
                                .map_err(|e| e.to_string())?
                            {
                                vals.push(v);
                            }
                        }
                        (!vals.is_empty())
                            .then(|| vec![vals.iter().sum::<f64>() / vals.len() as f64])
                    }
                    "com_displacement" => {
                        let mut sum = 0.0;
                        for &lead in &leads {
                            sum += metrics::com_displacement(ev.output_frame(lead), &frames[lead])
                                .map_err(|e| e.to_string())?
                                .delta_r;
                        }
                        Some(vec![sum / leads.len() as f64])
                    }
                    "diff_trend" => {
                        let i = spec.params.get("i").and_then(|v| v.as_i64()).unwrap_or(0);
                        let j = param_usize(spec, "j").unwrap_or(ev.output_len() - 1);
                        params.insert("i".into(), i.into());
                        params.insert("j".into(), (j as u64).into());
                        let (dg, dp) = metrics::differential_trend(ev, frames, i, j)
                            .map_err(|e| e.to_string())?;
                        Some(vec![dg, dp])
                    }
                    "mean_intensity" => Some(vec![metrics::mean_intensity(ev)]),
                    other => return Err(format!("unknown precip metric {other:?}")),
                };
                if let Some(v) = value {
                    per_sample.insert(ev.event_id, v);
                }
            }
        }
    }
    Ok(MetricReport::from_per_sample(
        spec.name.clone(),
        params,
        None,
        per_sample,
    ))
}

// ---------------------------------------------------------------------------

fn report_file_name(index: usize, metric: &str) -> String {
    format!("cell_{index:03}_{metric}.json")
}

fn execute_cell(
    plan: &SweepPlan,
    data: &WorkloadData,
    cell: &PreparedCell,
    file_preds: Option<&PredictionSet>,
) -> Result<BTreeMap<String, MetricReport>, String> {
    match data {
        WorkloadData::Md(traj) => md_reports(plan, traj, cell, file_preds),
        WorkloadData::Jet(ds) => jet_reports(plan, ds, cell, file_preds),
        WorkloadData::Precip(events) => precip_reports(plan, events, cell, file_preds),
    }
}

/// Load a workload dataset and apply one slice spec to it.
pub fn slice_dataset(
    workload: PlanWorkload,
    dataset_path: &str,
    spec: &SliceSpec,
) -> Result<crate::sampling::SliceResult, PlanError> {
    spec.validate()?;
    let data = match workload {
        PlanWorkload::Md => WorkloadData::Md(
            io::load_trajectory(dataset_path)
                .map_err(|e| PlanError::Dataset("main".into(), e.to_string()))?,
        ),
        PlanWorkload::Jet => WorkloadData::Jet(
            io::load_jet_dataset(dataset_path)
                .map_err(|e| PlanError::Dataset("main".into(), e.to_string()))?,
        ),
        PlanWorkload::Precip => WorkloadData::Precip(
            io::load_precip_dataset(dataset_path)
                .map_err(|e| PlanError::Dataset("main".into(), e.to_string()))?,
        ),
    };
    let all_ids = data.all_ids();
    let sample_ids = apply_slice(&data, &all_ids, spec).map_err(PlanError::Invalid)?;
    Ok(crate::sampling::SliceResult {
        spec: spec.clone(),
        sample_ids,
        provenance: crate::sampling::Provenance {
            dataset_id: dataset_path.to_string(),
            seed: None,
        },
    })
}

/// One-shot evaluation without a sweep axis: slice, predict, and compute
/// every metric once. The returned map is metric name -> report.
pub fn evaluate(
    workload: PlanWorkload,
    dataset_path: &str,
    predictor: &PredictorSpec,
    metric_specs: &[MetricSpec],
    train_slice: Option<SliceSpec>,
    test_slice: Option<SliceSpec>,
    seed: u64,
) -> Result<BTreeMap<String, MetricReport>, PlanError> {
    let plan = SweepPlan {
        schema_version: crate::harness::plan::PLAN_SCHEMA_VERSION,
        plan_id: "eval".into(),
        seed,
        workload,
        datasets: BTreeMap::from([(
            "main".to_string(),
            crate::harness::plan::DatasetRef {
                path: dataset_path.to_string(),
            },
        )]),
        axis: SweepAxis::SubsetSizes { sizes: vec![] },
        train_slice,
        test_slice,
        transforms: vec![],
        predictor: predictor.clone(),
        metrics: metric_specs.to_vec(),
        output_dir: None,
    };
    // A direct cell, bypassing axis validation (the empty-axis plan above
    // is not a valid sweep, only a carrier for the shared fields).
    let known = crate::harness::plan::known_metrics(workload);
    for m in metric_specs {
        if !known.contains(&m.name.as_str()) {
            return Err(PlanError::UnknownMetric(m.name.clone()));
        }
    }
    let data = WorkloadData::load(&plan)?;
    let all_ids = data.all_ids();
    let train_ids = match plan
        .train_slice
        .clone()
        .or_else(|| default_train_slice(workload))
    {
        Some(spec) => apply_slice(&data, &all_ids, &spec).map_err(PlanError::Invalid)?,
        None => all_ids.clone(),
    };
    let test_ids = match plan
        .test_slice
        .clone()
        .or_else(|| default_test_slice(workload))
    {
        Some(spec) => apply_slice(&data, &all_ids, &spec).map_err(PlanError::Invalid)?,
        None => all_ids.clone(),
    };
    let cell = PreparedCell {
        index: 0,
        coords: serde_json::json!({}),
        seed: derive_seed(seed, 0),
        train_ids,
        test_ids,
        angle_deg: None,
    };
    let file_preds = match predictor {
        PredictorSpec::File { path } => Some(
            io::load_prediction_set(path)
                .map_err(|e| PlanError::Dataset("predictions".into(), e.to_string()))?,
        ),
        _ => None,
    };
    execute_cell(&plan, &data, &cell, file_preds.as_ref()).map_err(PlanError::Invalid)
}

/// Run every cell of a plan, writing reports and a manifest under
/// `out_dir`. `workers` caps cell-level parallelism (1 = sequential).
pub fn run_plan(
    plan: &SweepPlan,
    out_dir: impl AsRef<Path>,
    workers: usize,
) -> Result<SweepResult, PlanError> {
    run_plan_observed(plan, out_dir, workers, |_| {})
}

/// [`run_plan`] with a per-cell completion callback (called from worker
/// threads as cells finish).
pub fn run_plan_observed(
    plan: &SweepPlan,
    out_dir: impl AsRef<Path>,
    workers: usize,
    on_cell: impl Fn(&CellOutcome) + Sync,
) -> Result<SweepResult, PlanError> {
    plan.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|source| PlanError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let plan_hash = plan.hash()?;
    let data = WorkloadData::load(plan)?;
    let cells = prepare_cells(plan, &data)?;
    let file_preds = match &plan.predictor {
        PredictorSpec::File { path } => Some(
            io::load_prediction_set(path)
                .map_err(|e| PlanError::Dataset("predictions".into(), e.to_string()))?,
        ),
        _ => None,
    };
    let metric_names: Vec<String> = plan.metrics.iter().map(|m| m.name.clone()).collect();
    let workers = workers.max(1);
    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(cells.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let cell = &cells[i];
                let started = Instant::now();
                let report_names: BTreeMap<String, String> = metric_names
                    .iter()
                    .map(|m| (m.clone(), report_file_name(cell.index, m)))
                    .collect();
                // Resume: a cell whose reports all exist and parse is done.
                let cached = report_names
                    .values()
                    .all(|name| read_report(out_dir.join(name)).is_ok());
                let outcome = if cached {
                    CellOutcome {
                        index: cell.index,
                        coords: cell.coords.clone(),
                        status: CellStatus::Ok,
                        reports: report_names,
                        cached: true,
                        wall_time_ms: started.elapsed().as_millis() as u64,
                    }
                } else {
                    match execute_cell(plan, &data, cell, file_preds.as_ref()) {
                        Ok(reports) => {
                            let mut status = CellStatus::Ok;
                            for (metric, report) in &reports {
                                let path = out_dir.join(&report_names[metric]);
                                if let Err(e) = write_report(report, &path) {
                                    status = CellStatus::Failed {
                                        error: e.to_string(),
                                    };
                                    break;
                                }
                            }
                            CellOutcome {
                                index: cell.index,
                                coords: cell.coords.clone(),
                                status,
                                reports: report_names,
                                cached: false,
                                wall_time_ms: started.elapsed().as_millis() as u64,
                            }
                        }
                        Err(error) => CellOutcome {
                            index: cell.index,
                            coords: cell.coords.clone(),
                            status: CellStatus::Failed { error },
                            reports: report_names,
                            cached: false,
                            wall_time_ms: started.elapsed().as_millis() as u64,
                        },
                    }
                };
                on_cell(&outcome);
                outcomes.lock().expect("outcomes lock")[i] = Some(outcome);
            });
        }
    });
    let cells_out: Vec<CellOutcome> = outcomes
        .into_inner()
        .expect("outcomes lock")
        .into_iter()
        .map(|c| c.expect("every cell executed"))
        .collect();
    let manifest = Manifest {
        schema_version: 1,
        plan_id: plan.plan_id.clone(),
        plan_hash: plan_hash.clone(),
        cells: cells_out
            .iter()
            .map(|c| ManifestCell {
                index: c.index,
                coords: c.coords.clone(),
                status: c.status.clone(),
                reports: match c.status {
                    CellStatus::Ok => c.reports.clone(),
                    CellStatus::Failed { .. } => BTreeMap::new(),
                },
            })
            .collect(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let body = canonical_json(&manifest).map_err(|e| PlanError::Invalid(e.to_string()))?;
    let unchanged = std::fs::read(&manifest_path)
        .map(|existing| existing == body.as_bytes())
        .unwrap_or(false);
    if !unchanged {
        write_atomic(&manifest_path, body.as_bytes()).map_err(|source| PlanError::Io {
            path: manifest_path.display().to_string(),
            source,
        })?;
    }
    Ok(SweepResult {
        plan_id: plan.plan_id.clone(),
        plan_hash,
        out_dir: out_dir.to_path_buf(),
        cells: cells_out,
    })
}
