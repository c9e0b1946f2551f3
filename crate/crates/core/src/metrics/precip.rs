//! Precipitation metrics: CSI and its cumulative extension, raw and
//! active-area MAE, center-of-mass displacement, differential trend, and
//! the displacement-MAE diagnostic.
//!
//! Pixel coordinate convention: x is the column index j, y the row index
//! i, origin top-left.

use serde::{Deserialize, Serialize};

use crate::data::{Grid, PrecipEvent, PredictionSet};
use crate::error::MetricError;
use crate::sampling::event_is_responsive;

/// The standard threshold triple for light / medium / heavy precipitation.
pub const CSI_AVG_THRESHOLDS: [f64; 3] = [16.0, 32.0, 64.0];

/// Thresholded contingency counts: hits (A), misses (B), false alarms (C).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsiCounts {
    pub hits: u64,
    pub misses: u64,
    pub false_alarms: u64,
}

impl CsiCounts {
    pub fn responds(&self) -> bool {
        self.hits + self.misses + self.false_alarms > 0
    }

    pub fn score(&self) -> Option<f64> {
        let denom = self.hits + self.misses + self.false_alarms;
        if denom == 0 {
            None
        } else {
            Some(self.hits as f64 / denom as f64)
        }
    }
}

fn check_shapes(gt: &Grid, pd: &Grid) -> Result<(), MetricError> {
    if gt.shape() != pd.shape() {
        return Err(MetricError::ShapeMismatch {
            a: gt.shape(),
            b: pd.shape(),
        });
    }
    Ok(())
}

/// Count A, B, C at threshold `t` over a frame pair.
pub fn csi_counts(gt: &Grid, pd: &Grid, t: f64) -> Result<CsiCounts, MetricError> {
    check_shapes(gt, pd)?;
    let mut counts = CsiCounts {
        hits: 0,
        misses: 0,
        false_alarms: 0,
    };
    for (g, p) in gt.as_slice().iter().zip(pd.as_slice()) {
        match (*g >= t, *p >= t) {
            (true, true) => counts.hits += 1,
            (true, false) => counts.misses += 1,
            (false, true) => counts.false_alarms += 1,
            (false, false) => {}
        }
    }
    Ok(counts)
}

/// Critical success index A/(A+B+C), or `None` when the frame pair does
/// not respond to the threshold at all (A+B+C = 0). An unresponsive
/// frame is a no-value, never a 0 or 1.
pub fn csi(gt: &Grid, pd: &Grid, t: f64) -> Result<Option<f64>, MetricError> {
    Ok(csi_counts(gt, pd, t)?.score())
}

/// Mean of CSI at 16/32/64 mm/h. `None` if any component threshold is
/// unresponsive; components are never silently dropped from the average.
pub fn csi_avg(gt: &Grid, pd: &Grid) -> Result<Option<f64>, MetricError> {
    let mut sum = 0.0;
    for t in CSI_AVG_THRESHOLDS {
        match csi(gt, pd, t)? {
            Some(v) => sum += v,
            None => return Ok(None),
        }
    }
    Ok(Some(sum / CSI_AVG_THRESHOLDS.len() as f64))
}

/// Cumulative CSI: per lead frame, the histogram of CSI scores over the
/// threshold-responsive event subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuCsiGrid {
    pub schema_version: u32,
    /// Intensity threshold T, mm/h.
    pub threshold: f64,
    /// Number of CSI bins N.
    pub n_bins: usize,
    /// CSI score step s; bin j covers [s*j, s*(j+1)).
    pub step: f64,
    /// Rows, one per lead frame; each row holds N counts.
    pub counts: Vec<Vec<u64>>,
    /// Number of responsive events; every row sums to this.
    pub considered: u64,
}

impl CuCsiGrid {
    pub fn lead_count(&self) -> usize {
        self.counts.len()
    }
}

/// Quantize a CSI score into bin `min(floor(score/step), n_bins-1)`.
///
/// Scores at or above `n_bins * step` clamp into the top bin, so a
/// perfect frame (CSI = 1.0) is counted even when the grid covers less
/// than the full unit interval.
fn csi_bin(score: f64, step: f64, n_bins: usize) -> usize {
    ((score / step).floor() as usize).min(n_bins - 1)
}

/// Build the CuCSI grid over `events`.
///
/// Events are re-filtered to the threshold-responsive subset internally,
/// so the grid is correct whether or not the caller pre-filtered.
pub fn cucsi(
    events: &[PrecipEvent],
    preds: &PredictionSet,
    threshold: f64,
    n_bins: usize,
    step: f64,
) -> Result<CuCsiGrid, MetricError> {
    if n_bins == 0 || !(step > 0.0) {
        return Err(MetricError::EmptyInput);
    }
    if n_bins as f64 * step < 1.0 {
        log::warn!(
            "CuCSI grid covers only [0, {}): scores above clamp into the top bin",
            n_bins as f64 * step
        );
    }
    let mut lead_count = None;
    for ev in events {
        match lead_count {
            None => lead_count = Some(ev.output_len()),
            Some(f) if f != ev.output_len() => {
                return Err(MetricError::MixedOutputLen(f, ev.output_len()));
            }
            _ => {}
        }
    }
    let lead_count = lead_count.unwrap_or(0);
    let mut counts = vec![vec![0u64; n_bins]; lead_count];
    let mut considered = 0u64;
    for ev in events {
        let frames = preds.validate_frames_for(ev)?;
        if !event_is_responsive(ev, frames, threshold) {
            continue;
        }
        considered += 1;
        for lead in 0..lead_count {
            let score = csi(ev.output_frame(lead), &frames[lead], threshold)?
                .expect("responsive event has defined CSI at every lead");
            counts[lead][csi_bin(score, step, n_bins)] += 1;
        }
    }
    Ok(CuCsiGrid {
        schema_version: 1,
        threshold,
        n_bins,
        step,
        counts,
        considered,
    })
}

/// Which frames define the active-area mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveMask {
    /// Pixels where ground truth reaches the threshold (the default
    /// reading of "an area defined by an intensity threshold").
    GroundTruth,
    /// Pixels where ground truth or prediction reaches the threshold.
    /// Offered as an alternative; not the default.
    Union,
}

/// MAE restricted to the active area, or `None` when the mask is empty.
pub fn active_area_mae(gt: &Grid, pd: &Grid, t_active: f64) -> Result<Option<f64>, MetricError> {
    active_area_mae_masked(gt, pd, t_active, ActiveMask::GroundTruth)
}

/// [`active_area_mae`] with an explicit mask source.
pub fn active_area_mae_masked(
    gt: &Grid,
    pd: &Grid,
    t_active: f64,
    mask: ActiveMask,
) -> Result<Option<f64>, MetricError> {
    check_shapes(gt, pd)?;
    let mut sum = 0.0;
    let mut n = 0u64;
    for (g, p) in gt.as_slice().iter().zip(pd.as_slice()) {
        let active = match mask {
            ActiveMask::GroundTruth => *g >= t_active,
            ActiveMask::Union => *g >= t_active || *p >= t_active,
        };
        if active {
            sum += (g - p).abs();
            n += 1;
        }
    }
    Ok((n > 0).then(|| sum / n as f64))
}

/// Plain pixel MAE over the whole frame.
pub fn raw_mae(gt: &Grid, pd: &Grid) -> Result<f64, MetricError> {
    check_shapes(gt, pd)?;
    let sum: f64 = gt
        .as_slice()
        .iter()
        .zip(pd.as_slice())
        .map(|(g, p)| (g - p).abs())
        .sum();
    Ok(sum / gt.as_slice().len() as f64)
}

/// Intensity-weighted center of mass (x = column, y = row), or `None`
/// for a zero-mass frame.
pub fn center_of_mass(g: &Grid) -> Option<(f64, f64)> {
    let mut mass = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for (i, j, v) in g.pixels() {
        mass += v;
        mx += j as f64 * v;
        my += i as f64 * v;
    }
    (mass > 0.0).then(|| (mx / mass, my / mass))
}

/// Ground-truth and predicted centers plus their Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComDisplacement {
    pub gt_x: f64,
    pub gt_y: f64,
    pub pd_x: f64,
    pub pd_y: f64,
    /// Distance between the centers, in pixels.
    pub delta_r: f64,
}

/// Center-of-mass displacement between a frame pair.
pub fn com_displacement(gt: &Grid, pd: &Grid) -> Result<ComDisplacement, MetricError> {
    check_shapes(gt, pd)?;
    let (gt_x, gt_y) = center_of_mass(gt).ok_or(MetricError::ZeroMass {
        which: "ground truth",
    })?;
    let (pd_x, pd_y) = center_of_mass(pd).ok_or(MetricError::ZeroMass {
        which: "prediction",
    })?;
    let delta_r = ((gt_x - pd_x).powi(2) + (gt_y - pd_y).powi(2)).sqrt();
    Ok(ComDisplacement {
        gt_x,
        gt_y,
        pd_x,
        pd_y,
        delta_r,
    })
}

/// Differential trend between time `i` and forecast lead `j`.
///
/// `i` is a signed frame time: negative values index the input window
/// (-p..-1), non-negative values the forecast range with ground truth.
/// Both differentials share the ground-truth frame at `i` as the offset:
///
/// diff_gt = (sum gt_j - sum gt_i) / (H*W)
/// diff_pd = (sum pd_j - sum gt_i) / (H*W)
pub fn differential_trend(
    event: &PrecipEvent,
    pred_frames: &[Grid],
    i: i64,
    j: usize,
) -> Result<(f64, f64), MetricError> {
    let p = event.input_len() as i64;
    let t = event.frames().len() as i64;
    let idx = p + i;
    if idx < 0 || idx >= t {
        return Err(MetricError::IndexOutOfRange(
            i,
            format!("event has frame times -{p}..{}", t - p - 1),
        ));
    }
    if j >= event.output_len() || j >= pred_frames.len() {
        return Err(MetricError::IndexOutOfRange(
            j as i64,
            format!("event has {} forecast leads", event.output_len()),
        ));
    }
    let gt_i = &event.frames()[idx as usize];
    let gt_j = event.output_frame(j);
    let pd_j = &pred_frames[j];
    check_shapes(gt_j, pd_j)?;
    let area = (gt_i.h() * gt_i.w()) as f64;
    let offset = gt_i.sum();
    Ok(((gt_j.sum() - offset) / area, (pd_j.sum() - offset) / area))
}

/// Mean ground-truth intensity of an event's forecast frames; the
/// data-space metric the MAE correlation analysis joins against.
pub fn mean_intensity(event: &PrecipEvent) -> f64 {
    let frames = event.output_frames();
    let total: f64 = frames.iter().map(|g| g.sum()).sum();
    let pixels = frames.iter().map(|g| g.as_slice().len()).sum::<usize>() as f64;
    total / pixels
}

/// MAE between a frame and translated copies of itself (zero fill
/// outside), one (||d||, MAE) pair per displacement.
///
/// Demonstrates that pixelwise error saturates once supports no longer
/// overlap: past separation the MAE is exactly constant, however far the
/// copy moves.
pub fn displacement_mae_curve(frame: &Grid, displacements: &[(i64, i64)]) -> Vec<(f64, f64)> {
    let (h, w) = frame.shape();
    let area = (h * w) as f64;
    displacements
        .iter()
        .map(|&(dx, dy)| {
            let mut abs = 0.0;
            for (i, j, v) in frame.pixels() {
                let si = i as i64 - dy;
                let sj = j as i64 - dx;
                let shifted = if si >= 0 && si < h as i64 && sj >= 0 && sj < w as i64 {
                    frame.get(si as usize, sj as usize)
                } else {
                    0.0
                };
                abs += (v - shifted).abs();
            }
            (((dx * dx + dy * dy) as f64).sqrt(), abs / area)
        })
        .collect()
}
