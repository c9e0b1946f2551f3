//! Error tracing: join per-sample metric values across reports by sample
//! id and correlate the requested pairs.

use std::collections::BTreeSet;

use crate::error::PlanError;
use crate::metrics::{pearson_linfit, CorrelationResult};
use crate::report::MetricReport;

/// Joined per-sample table plus the requested pairwise correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceOutput {
    /// One column per input report (its metric name, deduplicated).
    pub column_names: Vec<String>,
    /// Inner join on sample id, id-sorted; one primary value per column.
    pub table: Vec<(i64, Vec<f64>)>,
    pub correlations: Vec<CorrelationResult>,
}

impl TraceOutput {
    /// Scatter points of column `y` against column `x`.
    pub fn scatter(&self, x: usize, y: usize) -> Vec<(f64, f64)> {
        self.table.iter().map(|(_, row)| (row[x], row[y])).collect()
    }

    /// CSV of the joined table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_id");
        for name in &self.column_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (id, row) in &self.table {
            out.push_str(&id.to_string());
            for v in row {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Inner-join reports on sample id and fit each requested column pair.
///
/// `joins` holds (x, y) indices into `reports`. A self-join is allowed
/// and yields r = 1 exactly.
pub fn trace_errors(
    reports: &[&MetricReport],
    joins: &[(usize, usize)],
) -> Result<TraceOutput, PlanError> {
    if reports.is_empty() {
        return Err(PlanError::EmptyJoin);
    }
    for &(x, y) in joins {
        if x >= reports.len() || y >= reports.len() {
            return Err(PlanError::Invalid(format!(
                "join ({x}, {y}) references a report outside 0..{}",
                reports.len()
            )));
        }
    }
    let mut shared: BTreeSet<i64> = reports[0].per_sample.keys().copied().collect();
    for report in &reports[1..] {
        let keys: BTreeSet<i64> = report.per_sample.keys().copied().collect();
        shared = shared.intersection(&keys).copied().collect();
    }
    if shared.is_empty() {
        return Err(PlanError::EmptyJoin);
    }
    let mut column_names: Vec<String> = Vec::new();
    for report in reports {
        let base = report.metric_name.clone();
        let name = if column_names.contains(&base) {
            format!("{base}_{}", column_names.len())
        } else {
            base
        };
        column_names.push(name);
    }
    let table: Vec<(i64, Vec<f64>)> = shared
        .iter()
        .map(|&id| {
            let row = reports
                .iter()
                .map(|r| r.per_sample[&id].first().copied().unwrap_or(f64::NAN))
                .collect();
            (id, row)
        })
        .collect();
    let mut correlations = Vec::with_capacity(joins.len());
    for &(x, y) in joins {
        let points: Vec<(f64, f64)> = table.iter().map(|(_, row)| (row[x], row[y])).collect();
        let fit = pearson_linfit(&column_names[x], &column_names[y], &points)
            .map_err(|e| PlanError::Invalid(e.to_string()))?;
        correlations.push(fit);
    }
    Ok(TraceOutput {
        column_names,
        table,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn report(name: &str, values: &[(i64, f64)]) -> MetricReport {
        let per_sample: BTreeMap<i64, Vec<f64>> =
            values.iter().map(|&(id, v)| (id, vec![v])).collect();
        MetricReport::from_per_sample(name, BTreeMap::new(), None, per_sample)
    }

    #[test]
    fn self_join_correlates_perfectly() {
        let r = report("mae", &[(0, 1.0), (1, 2.0), (2, 5.0)]);
        let out = trace_errors(&[&r], &[(0, 0)]).unwrap();
        assert_eq!(out.correlations[0].pearson_r, 1.0);
        assert_eq!(out.table.len(), 3);
    }

    #[test]
    fn join_keeps_only_shared_ids() {
        let a = report("mae", &[(0, 1.0), (1, 2.0), (2, 3.0)]);
        let b = report("intensity", &[(1, 10.0), (2, 20.0), (3, 30.0)]);
        let out = trace_errors(&[&a, &b], &[(1, 0)]).unwrap();
        assert_eq!(
            out.table.iter().map(|(id, _)| *id).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(out.column_names, vec!["mae", "intensity"]);
    }

    #[test]
    fn disjoint_ids_are_an_empty_join() {
        let a = report("mae", &[(0, 1.0)]);
        let b = report("intensity", &[(1, 2.0)]);
        assert!(matches!(
            trace_errors(&[&a, &b], &[(0, 1)]),
            Err(PlanError::EmptyJoin)
        ));
    }

    #[test]
    fn constructed_linear_relation_recovers_high_r() {
        let xs: Vec<(i64, f64)> = (0..40).map(|i| (i, 1.0 + i as f64)).collect();
        let ys: Vec<(i64, f64)> = xs.iter().map(|&(i, x)| (i, 3.0 * x + 0.5)).collect();
        let a = report("intensity", &xs);
        let b = report("mae", &ys);
        let out = trace_errors(&[&a, &b], &[(0, 1)]).unwrap();
        assert!(out.correlations[0].pearson_r > 0.999);
        let csv = out.to_csv();
        assert!(csv.starts_with("sample_id,intensity,mae\n"));
    }
}
