//! Sweep plans: a declarative JSON description of one experiment grid.
//!
//! A plan names its workload and datasets, picks exactly one sweep axis,
//! a predictor, and a metric list. Per-cell randomness is derived from
//! the plan seed and the cell index, so adding cells to a plan never
//! perturbs existing ones.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::report::canonical_json;
use crate::sampling::SliceSpec;
use crate::transforms::DescriptorParams;

pub const PLAN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanWorkload {
    Md,
    Jet,
    Precip,
}

impl PlanWorkload {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanWorkload::Md => "md",
            PlanWorkload::Jet => "jet",
            PlanWorkload::Precip => "precip",
        }
    }
}

/// A dataset reference; paths are resolved relative to the plan file's
/// directory when loaded through [`SweepPlan::from_path`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub path: String,
}

/// The one axis a plan sweeps along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Training subset sizes (sample efficiency).
    SubsetSizes { sizes: Vec<usize> },
    /// Training window grid scan; optionally subsample each window.
    WindowGrid {
        sizes: Vec<f64>,
        starts: Vec<f64>,
        max_end: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_count: Option<usize>,
    },
    /// Rotated test-set versions.
    RotationAngles { step_deg: f64, count: usize },
    /// Feature-binned training groups crossed with test bins.
    BinSweep {
        feature: String,
        lo: f64,
        hi: f64,
        n_bins: usize,
        /// Each group is a set of training bins to equal-sample from.
        groups: Vec<Vec<usize>>,
        /// Total training draws per group.
        train_total: usize,
    },
    /// Repeated stochastic prediction runs.
    Repetitions { runs: usize },
}

impl SweepAxis {
    fn name(&self) -> &'static str {
        match self {
            SweepAxis::SubsetSizes { .. } => "subset_sizes",
            SweepAxis::WindowGrid { .. } => "window_grid",
            SweepAxis::RotationAngles { .. } => "rotation_angles",
            SweepAxis::BinSweep { .. } => "bin_sweep",
            SweepAxis::Repetitions { .. } => "repetitions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToyPredictorSpec {
    KnnForces {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        descriptor: Option<DescriptorParams>,
    },
    LinearTagger,
    AdvectionExtrapolator {
        #[serde(default)]
        noise_amp: f64,
        #[serde(default)]
        relative_noise: bool,
    },
}

fn default_timeout_secs() -> u64 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PredictorSpec {
    /// In-process toy predictor.
    Toy(ToyPredictorSpec),
    /// External process speaking the stdio protocol. The placeholders
    /// `{cell_index}` and `{cell_seed}` in arguments are substituted per
    /// cell before spawning.
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
    },
    /// Pre-computed predictions loaded from a file.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
}

/// A fixed transform applied to every test sample before evaluation
/// (on top of whatever the sweep axis varies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TransformSpec {
    /// Rotate jet events about the beam axis.
    Rotate { angle_deg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub schema_version: u32,
    pub plan_id: String,
    pub seed: u64,
    pub workload: PlanWorkload,
    /// Must contain a dataset named "main".
    pub datasets: BTreeMap<String, DatasetRef>,
    #[serde(flatten)]
    pub axis: SweepAxis,
    /// Training pool; defaults to the first 90% (by time) for md and the
    /// first 80% of ids for jet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_slice: Option<SliceSpec>,
    /// Evaluation slice; defaults to the last 10% (by time) for md, the
    /// last 20% of ids for jet, and all events for precip.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_slice: Option<SliceSpec>,
    /// Fixed transforms applied to every test sample.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<TransformSpec>,
    pub predictor: PredictorSpec,
    pub metrics: Vec<MetricSpec>,
    /// Default report directory; a CLI --out beats it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// Metric names each workload understands.
pub fn known_metrics(workload: PlanWorkload) -> &'static [&'static str] {
    match workload {
        PlanWorkload::Md => &["force_mae", "energy_error", "error_scatter"],
        PlanWorkload::Jet => &["accuracy", "roc_auc"],
        PlanWorkload::Precip => &[
            "mae",
            "active_area_mae",
            "csi",
            "csi_avg",
            "cucsi",
            "com_displacement",
            "diff_trend",
            "mean_intensity",
        ],
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.schema_version != PLAN_SCHEMA_VERSION {
            return Err(PlanError::Invalid(format!(
                "unsupported plan schema_version {}",
                self.schema_version
            )));
        }
        if self.plan_id.is_empty() {
            return Err(PlanError::Invalid("plan_id must be non-empty".into()));
        }
        if !self.datasets.contains_key("main") {
            return Err(PlanError::Invalid("datasets must include \"main\"".into()));
        }
        if self.metrics.is_empty() {
            return Err(PlanError::Invalid("at least one metric required".into()));
        }
        let known = known_metrics(self.workload);
        for m in &self.metrics {
            if !known.contains(&m.name.as_str()) {
                return Err(PlanError::UnknownMetric(m.name.clone()));
            }
        }
        let workload_ok = matches!(
            (&self.axis, self.workload),
            (SweepAxis::SubsetSizes { .. }, _)
                | (SweepAxis::WindowGrid { .. }, PlanWorkload::Md)
                | (SweepAxis::RotationAngles { .. }, PlanWorkload::Jet)
                | (SweepAxis::BinSweep { .. }, PlanWorkload::Jet)
                | (SweepAxis::Repetitions { .. }, PlanWorkload::Precip)
        );
        if !workload_ok {
            return Err(PlanError::Invalid(format!(
                "axis {} does not apply to workload {}",
                self.axis.name(),
                self.workload.as_str()
            )));
        }
        match &self.axis {
            SweepAxis::SubsetSizes { sizes } if sizes.is_empty() => {
                return Err(PlanError::Invalid(
                    "subset_sizes needs at least one size".into(),
                ));
            }
            SweepAxis::RotationAngles { step_deg, count } => {
                if *count == 0 || step_deg * *count as f64 > 360.0 + 1e-9 {
                    return Err(PlanError::Invalid(
                        "rotation sweep must cover (0, 360] degrees".into(),
                    ));
                }
            }
            SweepAxis::BinSweep {
                lo,
                hi,
                n_bins,
                groups,
                ..
            } => {
                if !(lo < hi) || *n_bins == 0 {
                    return Err(PlanError::Invalid(
                        "bin_sweep needs lo < hi and n_bins >= 1".into(),
                    ));
                }
                if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
                    return Err(PlanError::Invalid(
                        "bin_sweep groups must be non-empty".into(),
                    ));
                }
                if let Some(&bad) = groups.iter().flatten().find(|&&b| b >= *n_bins) {
                    return Err(PlanError::Invalid(format!(
                        "group bin {bad} outside [0, {n_bins})"
                    )));
                }
            }
            SweepAxis::Repetitions { runs } if *runs == 0 => {
                return Err(PlanError::Invalid("repetitions needs runs >= 1".into()));
            }
            _ => {}
        }
        if let Some(spec) = &self.train_slice {
            spec.validate()
                .map_err(|e| PlanError::Invalid(e.to_string()))?;
        }
        if let Some(spec) = &self.test_slice {
            spec.validate()
                .map_err(|e| PlanError::Invalid(e.to_string()))?;
        }
        for t in &self.transforms {
            match t {
                TransformSpec::Rotate { angle_deg } => {
                    if self.workload != PlanWorkload::Jet {
                        return Err(PlanError::Invalid(
                            "rotate transform only applies to jet datasets".into(),
                        ));
                    }
                    if !angle_deg.is_finite() {
                        return Err(PlanError::Invalid("rotate angle must be finite".into()));
                    }
                }
            }
        }
        let predictor_ok = matches!(
            (&self.predictor, self.workload),
            (
                PredictorSpec::Toy(ToyPredictorSpec::KnnForces { .. }),
                PlanWorkload::Md
            ) | (
                PredictorSpec::Toy(ToyPredictorSpec::LinearTagger),
                PlanWorkload::Jet
            ) | (
                PredictorSpec::Toy(ToyPredictorSpec::AdvectionExtrapolator { .. }),
                PlanWorkload::Precip
            ) | (PredictorSpec::External { .. }, _)
                | (PredictorSpec::File { .. }, _)
        );
        if !predictor_ok {
            return Err(PlanError::Invalid(format!(
                "predictor does not apply to workload {}",
                self.workload.as_str()
            )));
        }
        if let PredictorSpec::External { command, .. } = &self.predictor {
            if command.is_empty() {
                return Err(PlanError::Invalid(
                    "external predictor command is empty".into(),
                ));
            }
        }
        Ok(())
    }

    /// Canonical JSON (sorted keys, trailing newline) of the plan.
    pub fn to_canonical_json(&self) -> Result<String, PlanError> {
        canonical_json(self).map_err(|e| PlanError::Invalid(e.to_string()))
    }

    /// SHA-256 hex digest of the canonical plan bytes.
    pub fn hash(&self) -> Result<String, PlanError> {
        use sha2::{Digest, Sha256};
        let body = self.to_canonical_json()?;
        let mut hasher = Sha256::new();
        hasher.update(body.as_bytes());
        Ok(format!("{:x}", hasher.finalize()))
    }

    /// Parse and validate a plan file, resolving dataset paths relative
    /// to the plan's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PlanError> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|source| PlanError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut plan: SweepPlan = serde_json::from_str(&raw).map_err(|e| PlanError::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        if let Some(base) = path.parent() {
            for ds in plan.datasets.values_mut() {
                let p = Path::new(&ds.path);
                if p.is_relative() {
                    ds.path = base.join(p).display().to_string();
                }
            }
        }
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_plan() -> SweepPlan {
        SweepPlan {
            schema_version: PLAN_SCHEMA_VERSION,
            plan_id: "p1".into(),
            seed: 7,
            workload: PlanWorkload::Md,
            datasets: BTreeMap::from([(
                "main".to_string(),
                DatasetRef {
                    path: "traj.jsonl".into(),
                },
            )]),
            axis: SweepAxis::SubsetSizes {
                sizes: vec![10, 20],
            },
            train_slice: None,
            test_slice: None,
            transforms: vec![],
            predictor: PredictorSpec::Toy(ToyPredictorSpec::KnnForces { descriptor: None }),
            metrics: vec![MetricSpec {
                name: "force_mae".into(),
                params: BTreeMap::new(),
            }],
            output_dir: None,
        }
    }

    #[test]
    fn minimal_plan_validates_and_round_trips() {
        let plan = minimal_plan();
        plan.validate().unwrap();
        let json = plan.to_canonical_json().unwrap();
        let back: SweepPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn hash_is_stable_and_input_sensitive() {
        let plan = minimal_plan();
        let h1 = plan.hash().unwrap();
        assert_eq!(h1, plan.hash().unwrap());
        let mut other = plan.clone();
        other.seed = 8;
        assert_ne!(h1, other.hash().unwrap());
    }

    #[test]
    fn unknown_metric_is_rejected() {
        let mut plan = minimal_plan();
        plan.metrics[0].name = "psnr".into();
        assert!(matches!(plan.validate(), Err(PlanError::UnknownMetric(_))));
    }

    #[test]
    fn axis_workload_mismatch_is_rejected() {
        let mut plan = minimal_plan();
        plan.axis = SweepAxis::RotationAngles {
            step_deg: 5.0,
            count: 36,
        };
        assert!(matches!(plan.validate(), Err(PlanError::Invalid(_))));
    }

    #[test]
    fn predictor_workload_mismatch_is_rejected() {
        let mut plan = minimal_plan();
        plan.predictor = PredictorSpec::Toy(ToyPredictorSpec::LinearTagger);
        assert!(matches!(plan.validate(), Err(PlanError::Invalid(_))));
    }

    #[test]
    fn missing_main_dataset_is_rejected() {
        let mut plan = minimal_plan();
        plan.datasets.clear();
        assert!(matches!(plan.validate(), Err(PlanError::Invalid(_))));
    }
}
