//! Metric kernels with per-sample breakdowns.
//!
//! Every kernel is a pure function: deterministic, order-insensitive
//! (aggregation happens over id-sorted sequences), and each retains
//! per-sample values so aggregate errors can be traced back to slices.

mod classification;
mod correlation;
mod precip;
mod regression;
mod stability;

pub use classification::{classification_metrics, roc_auc, RocCurve};
pub use correlation::{histogram, pearson_linfit, CorrelationResult};
pub use precip::{
    active_area_mae, active_area_mae_masked, center_of_mass, com_displacement, csi, csi_avg,
    csi_counts, cucsi, differential_trend, displacement_mae_curve, mean_intensity, raw_mae,
    ActiveMask, ComDisplacement, CsiCounts, CuCsiGrid, CSI_AVG_THRESHOLDS,
};
pub use regression::{energy_error_series, error_scatter, flag_outliers_robust, force_mae};
pub use stability::{
    stability_analysis, EventStability, LeadStability, StabilityMetric, StabilityResult,
};

use crate::data::{MolecularFrame, Trajectory};
use crate::error::MetricError;

/// Resolve slice ids to trajectory frames, in id order.
pub fn frames_by_ids<'a>(
    traj: &'a Trajectory,
    ids: &[i64],
) -> Result<Vec<&'a MolecularFrame>, MetricError> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted
        .into_iter()
        .map(|id| {
            traj.frame_by_time(id).ok_or_else(|| {
                MetricError::IndexOutOfRange(id, "no frame with this time_index".into())
            })
        })
        .collect()
}
