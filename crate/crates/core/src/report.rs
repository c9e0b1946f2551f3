//! Metric reports: per-sample values plus recomputable aggregates,
//! serialized as canonical JSON so identical reports are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ReportError;
use crate::sampling::SliceSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Summary statistics over a report's primary per-sample values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub count: u64,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Aggregates {
    /// Compute from values in id-sorted order. Returns None for empty input.
    pub fn compute(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let count = values.len() as u64;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(Self {
            count,
            mean,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

/// Fixed-width histogram; the last bin is closed above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.bin_width * self.counts.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One metric evaluated over one slice, with per-sample detail retained
/// for error tracing.
///
/// `per_sample` maps sample id to one or more values; the first value is
/// the primary one and is what `aggregates` summarizes. Extra values are
/// metric-specific companions (documented per metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub metric_name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<SliceSpec>,
    pub per_sample: BTreeMap<i64, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregates: Option<Aggregates>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histograms: Vec<Histogram>,
}

impl MetricReport {
    /// Build a report from per-sample values, computing aggregates from
    /// the primary (first) value of each sample in id order.
    pub fn from_per_sample(
        metric_name: impl Into<String>,
        params: BTreeMap<String, serde_json::Value>,
        scope: Option<SliceSpec>,
        per_sample: BTreeMap<i64, Vec<f64>>,
    ) -> Self {
        let primary: Vec<f64> = per_sample
            .values()
            .filter_map(|v| v.first().copied())
            .collect();
        let aggregates = Aggregates::compute(&primary);
        Self {
            schema_version: SCHEMA_VERSION,
            metric_name: metric_name.into(),
            params,
            scope,
            per_sample,
            aggregates,
            histograms: Vec::new(),
        }
    }

    /// Primary values in id order.
    pub fn primary_values(&self) -> Vec<(i64, f64)> {
        self.per_sample
            .iter()
            .filter_map(|(&id, v)| v.first().map(|&x| (id, x)))
            .collect()
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(|v| v.as_f64())
    }

    /// Check report invariants: finite values, aggregates recomputable
    /// from per-sample values within 1e-12, non-empty per_sample when
    /// aggregates are present.
    pub fn validate(&self) -> Result<(), ReportError> {
        for vals in self.per_sample.values() {
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(ReportError::NonFinite("per_sample"));
            }
        }
        if let Some(stored) = &self.aggregates {
            if self.per_sample.is_empty() {
                return Err(ReportError::EmptyPerSample);
            }
            let primary: Vec<f64> = self
                .per_sample
                .values()
                .filter_map(|v| v.first().copied())
                .collect();
            let recomputed = Aggregates::compute(&primary).ok_or(ReportError::EmptyPerSample)?;
            let close = |field: &'static str, a: f64, b: f64| -> Result<(), ReportError> {
                if (a - b).abs() <= 1e-12 * b.abs().max(1.0) {
                    Ok(())
                } else {
                    Err(ReportError::AggregateMismatch {
                        field,
                        stored: a,
                        recomputed: b,
                    })
                }
            };
            if stored.count != recomputed.count {
                return Err(ReportError::AggregateMismatch {
                    field: "count",
                    stored: stored.count as f64,
                    recomputed: recomputed.count as f64,
                });
            }
            close("mean", stored.mean, recomputed.mean)?;
            close("median", stored.median, recomputed.median)?;
            close("min", stored.min, recomputed.min)?;
            close("max", stored.max, recomputed.max)?;
        }
        Ok(())
    }

    /// Canonical JSON bytes: object keys sorted, floats as shortest
    /// round-trip decimals, one trailing newline.
    pub fn to_canonical_json(&self) -> Result<String, ReportError> {
        canonical_json(self).map_err(|e| ReportError::Parse {
            path: "<memory>".into(),
            detail: e.to_string(),
        })
    }
}

/// Serialize any value as canonical JSON (sorted keys via serde_json's
/// BTreeMap-backed maps, ryu shortest-round-trip floats, trailing newline).
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string(&v)?;
    s.push('\n');
    Ok(s)
}

/// Validate and write a report as canonical JSON. Identical reports
/// produce byte-identical files.
pub fn write_report(report: &MetricReport, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    report.validate()?;
    let body = report.to_canonical_json()?;
    write_atomic(path, body.as_bytes()).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read a report back, re-checking its invariants.
pub fn read_report(path: impl AsRef<Path>) -> Result<MetricReport, ReportError> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let report: MetricReport = serde_json::from_str(&raw).map_err(|e| ReportError::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    report.validate()?;
    Ok(report)
}

/// Write via a temp file in the same directory plus an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> MetricReport {
        let mut per_sample = BTreeMap::new();
        per_sample.insert(3, vec![1.0]);
        per_sample.insert(1, vec![2.0]);
        per_sample.insert(2, vec![6.0]);
        MetricReport::from_per_sample("mae", BTreeMap::new(), None, per_sample)
    }

    #[test]
    fn aggregates_match_hand_sums() {
        let r = sample_report();
        let a = r.aggregates.as_ref().unwrap();
        assert_eq!(a.count, 3);
        assert_eq!(a.mean, 3.0);
        assert_eq!(a.median, 2.0);
        assert_eq!(a.min, 1.0);
        assert_eq!(a.max, 6.0);
        r.validate().unwrap();
    }

    #[test]
    fn inconsistent_aggregates_rejected() {
        let mut r = sample_report();
        r.aggregates.as_mut().unwrap().mean = 4.0;
        assert!(matches!(
            r.validate().unwrap_err(),
            ReportError::AggregateMismatch { field: "mean", .. }
        ));
    }

    #[test]
    fn aggregates_without_samples_rejected() {
        let mut r = sample_report();
        r.per_sample.clear();
        assert!(matches!(
            r.validate().unwrap_err(),
            ReportError::EmptyPerSample
        ));
    }

    #[test]
    fn writes_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample_report();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        write_report(&r, &p1).unwrap();
        write_report(&r, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        let back = read_report(&p1).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let mut r = sample_report();
        r.set_param("threshold", 16.0);
        r.set_param("n_bins", 30);
        let s = r.to_canonical_json().unwrap();
        let n = s.find("\"n_bins\"").unwrap();
        let t = s.find("\"threshold\"").unwrap();
        assert!(n < t);
    }

    #[test]
    fn median_of_even_count_is_midpoint() {
        let a = Aggregates::compute(&[1.0, 2.0, 10.0, 4.0]).unwrap();
        assert_eq!(a.median, 3.0);
    }
}
