//! Force and energy error metrics with structural breakdowns.

use std::collections::BTreeMap;

use crate::data::{MolecularFrame, PredictionSet};
use crate::error::MetricError;
use crate::report::MetricReport;

/// Per-atom force MAE, averaged over atoms and the three vector
/// components (matching the componentwise force term of the usual
/// energy+force loss).
///
/// The report keeps one per-frame value per sample. `params` carries the
/// exact atom-weighted overall value under `overall_mae`, and, when
/// `group_by_species` is set, `per_species_mae` / `per_species_atom_count`
/// maps keyed by atomic number. The overall value decomposes exactly as
/// the atom-count-weighted mean of the per-species values.
pub fn force_mae(
    frames: &[&MolecularFrame],
    preds: &PredictionSet,
    group_by_species: bool,
) -> Result<MetricReport, MetricError> {
    if frames.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut per_sample = BTreeMap::new();
    let mut total_abs = 0.0f64;
    let mut total_components = 0u64;
    let mut by_species: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
    for frame in frames {
        let id = frame.time_index;
        let gt = frame
            .forces
            .as_ref()
            .ok_or(MetricError::Unlabeled(id, "force"))?;
        let (_, pd) = preds.validate_energy_forces_for(frame)?;
        let mut frame_abs = 0.0f64;
        for (atom, (fg, fp)) in gt.iter().zip(pd).enumerate() {
            let mut atom_abs = 0.0f64;
            for k in 0..3 {
                atom_abs += (fg[k] - fp[k]).abs();
            }
            frame_abs += atom_abs;
            if group_by_species {
                let entry = by_species.entry(frame.species[atom]).or_insert((0.0, 0));
                entry.0 += atom_abs;
                entry.1 += 1;
            }
        }
        let components = 3 * frame.n_atoms() as u64;
        total_abs += frame_abs;
        total_components += components;
        per_sample.insert(id, vec![frame_abs / components as f64]);
    }
    let mut report = MetricReport::from_per_sample("force_mae", BTreeMap::new(), None, per_sample);
    report.set_param("overall_mae", total_abs / total_components as f64);
    if group_by_species {
        let mut mae_map = serde_json::Map::new();
        let mut count_map = serde_json::Map::new();
        for (z, (sum, atoms)) in &by_species {
            mae_map.insert(z.to_string(), (sum / (3 * atoms) as f64).into());
            count_map.insert(z.to_string(), (*atoms).into());
        }
        report.set_param("per_species_mae", serde_json::Value::Object(mae_map));
        report.set_param(
            "per_species_atom_count",
            serde_json::Value::Object(count_map),
        );
    }
    Ok(report)
}

/// Signed energy error timeline, ordered by time index.
///
/// Per-sample value is the signed error (prediction minus ground truth),
/// divided by the atom count when `per_atom` is set. The aggregate MAE
/// over the series is stored in `params["mae"]`.
pub fn energy_error_series(
    frames: &[&MolecularFrame],
    preds: &PredictionSet,
    per_atom: bool,
) -> Result<MetricReport, MetricError> {
    if frames.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut per_sample = BTreeMap::new();
    let mut abs_sum = 0.0f64;
    for frame in frames {
        let id = frame.time_index;
        let gt = frame.energy.ok_or(MetricError::Unlabeled(id, "energy"))?;
        let (pd, _) = preds.validate_energy_forces_for(frame)?;
        let mut signed = pd - gt;
        if per_atom {
            signed /= frame.n_atoms() as f64;
        }
        abs_sum += signed.abs();
        per_sample.insert(id, vec![signed]);
    }
    let n = frames.len() as f64;
    let mut report =
        MetricReport::from_per_sample("energy_error", BTreeMap::new(), None, per_sample);
    report.set_param("mae", abs_sum / n);
    report.set_param("per_atom", per_atom);
    Ok(report)
}

/// One (|energy error|, mean |force error|) pair per frame, id-tagged.
pub fn error_scatter(
    frames: &[&MolecularFrame],
    preds: &PredictionSet,
) -> Result<Vec<(i64, f64, f64)>, MetricError> {
    let mut out = Vec::with_capacity(frames.len());
    for frame in frames {
        let id = frame.time_index;
        let gt_e = frame.energy.ok_or(MetricError::Unlabeled(id, "energy"))?;
        let gt_f = frame
            .forces
            .as_ref()
            .ok_or(MetricError::Unlabeled(id, "force"))?;
        let (pd_e, pd_f) = preds.validate_energy_forces_for(frame)?;
        let mut abs = 0.0f64;
        for (fg, fp) in gt_f.iter().zip(pd_f) {
            for k in 0..3 {
                abs += (fg[k] - fp[k]).abs();
            }
        }
        out.push((id, (pd_e - gt_e).abs(), abs / (3 * frame.n_atoms()) as f64));
    }
    out.sort_by_key(|&(id, _, _)| id);
    Ok(out)
}

/// Flag series entries that sit far outside the bulk: median +- 3 robust
/// sigmas (1.4826 * MAD). With MAD zero, anything off the median is
/// flagged. Returns the flagged ids in order.
pub fn flag_outliers_robust(series: &[(i64, f64)]) -> Vec<i64> {
    if series.len() < 3 {
        return Vec::new();
    }
    let med = |xs: &mut Vec<f64>| -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len();
        if n % 2 == 1 {
            xs[n / 2]
        } else {
            0.5 * (xs[n / 2 - 1] + xs[n / 2])
        }
    };
    let mut values: Vec<f64> = series.iter().map(|&(_, v)| v).collect();
    let center = med(&mut values);
    let mut deviations: Vec<f64> = series.iter().map(|&(_, v)| (v - center).abs()).collect();
    let mad = med(&mut deviations);
    let scale = 1.4826 * mad;
    series
        .iter()
        .filter(|&&(_, v)| {
            if scale > 0.0 {
                (v - center).abs() > 3.0 * scale
            } else {
                v != center
            }
        })
        .map(|&(id, _)| id)
        .collect()
}
