//! Binary classification metrics: accuracy with signal/background
//! breakdown, and the ROC curve with trapezoid AUC.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::report::MetricReport;

/// Accuracy at decision threshold 0.5, broken down by class.
///
/// Per-sample value is 1.0 for a correct decision. `params` carries
/// `signal_ratio` plus `signal_accuracy` / `background_accuracy`; an
/// absent class leaves its accuracy key out entirely rather than
/// reporting 0.
pub fn classification_metrics(samples: &[(i64, f64, u8)]) -> Result<MetricReport, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut per_sample = BTreeMap::new();
    let mut sig_total = 0u64;
    let mut sig_correct = 0u64;
    let mut bg_total = 0u64;
    let mut bg_correct = 0u64;
    for &(id, score, label) in samples {
        if !(0.0..=1.0).contains(&score) {
            return Err(MetricError::ScoreOutOfRange(score));
        }
        let predicted: u8 = u8::from(score >= 0.5);
        let correct = predicted == label;
        match label {
            1 => {
                sig_total += 1;
                sig_correct += u64::from(correct);
            }
            _ => {
                bg_total += 1;
                bg_correct += u64::from(correct);
            }
        }
        per_sample.insert(id, vec![f64::from(correct as u8)]);
    }
    let mut report = MetricReport::from_per_sample("accuracy", BTreeMap::new(), None, per_sample);
    report.set_param("threshold", 0.5);
    report.set_param("signal_ratio", sig_total as f64 / samples.len() as f64);
    if sig_total > 0 {
        report.set_param("signal_accuracy", sig_correct as f64 / sig_total as f64);
    }
    if bg_total > 0 {
        report.set_param("background_accuracy", bg_correct as f64 / bg_total as f64);
    }
    Ok(report)
}

/// An ROC curve from a threshold sweep over the distinct scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (FPR, TPR) pairs, monotone from (0,0) to (1,1). Tied scores are
    /// grouped, so each distinct score contributes one point.
    pub points: Vec<(f64, f64)>,
    /// Trapezoid area under the points.
    pub auc: f64,
}

/// Sweep thresholds over the distinct score values and integrate.
///
/// The trapezoid area equals the pairwise rank statistic
/// P(score+ > score-) + P(tie)/2.
pub fn roc_auc(samples: &[(f64, u8)]) -> Result<RocCurve, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let positives = samples.iter().filter(|&&(_, l)| l == 1).count() as f64;
    let negatives = samples.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(MetricError::SingleClass);
    }
    let mut sorted: Vec<(f64, u8)> = samples.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite scores"));
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        // Consume the whole tie group before emitting a point.
        while i < sorted.len() && sorted[i].0 == score {
            match sorted[i].1 {
                1 => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / negatives, tp as f64 / positives));
    }
    let mut auc = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        auc += (x1 - x0) * 0.5 * (y0 + y1);
    }
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    /// O(n^2) rank statistic: P(score+ > score-) + P(tie)/2.
    fn rank_auc(samples: &[(f64, u8)]) -> f64 {
        let pos: Vec<f64> = samples.iter().filter(|s| s.1 == 1).map(|s| s.0).collect();
        let neg: Vec<f64> = samples.iter().filter(|s| s.1 == 0).map(|s| s.0).collect();
        let mut sum = 0.0;
        for &p in &pos {
            for &n in &neg {
                sum += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        sum / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn perfect_scores_give_full_marks() {
        let samples: Vec<(i64, f64, u8)> = vec![(0, 0.9, 1), (1, 0.8, 1), (2, 0.1, 0), (3, 0.2, 0)];
        let r = classification_metrics(&samples).unwrap();
        assert_eq!(r.aggregates.as_ref().unwrap().mean, 1.0);
        assert_eq!(r.param_f64("signal_accuracy").unwrap(), 1.0);
        assert_eq!(r.param_f64("background_accuracy").unwrap(), 1.0);
        assert_eq!(r.param_f64("signal_ratio").unwrap(), 0.5);
    }

    #[test]
    fn constant_low_scores_predict_background() {
        let samples: Vec<(i64, f64, u8)> = (0..10).map(|i| (i, 0.4, (i % 2) as u8)).collect();
        let r = classification_metrics(&samples).unwrap();
        assert_eq!(r.aggregates.as_ref().unwrap().mean, 0.5);
        assert_eq!(r.param_f64("signal_accuracy").unwrap(), 0.0);
        assert_eq!(r.param_f64("background_accuracy").unwrap(), 1.0);
    }

    #[test]
    fn single_class_leaves_other_accuracy_missing() {
        let samples: Vec<(i64, f64, u8)> = vec![(0, 0.9, 1), (1, 0.2, 1)];
        let r = classification_metrics(&samples).unwrap();
        assert!(r.params.contains_key("signal_accuracy"));
        assert!(!r.params.contains_key("background_accuracy"));
    }

    #[test]
    fn accuracy_decomposes_over_classes() {
        let mut rng = SplitMix64::new(23);
        let samples: Vec<(i64, f64, u8)> = (0..200)
            .map(|i| (i, rng.next_f64(), (rng.next_u64() & 1) as u8))
            .collect();
        let r = classification_metrics(&samples).unwrap();
        let overall = r.aggregates.as_ref().unwrap().mean;
        let ratio = r.param_f64("signal_ratio").unwrap();
        let sig = r.param_f64("signal_accuracy").unwrap();
        let bg = r.param_f64("background_accuracy").unwrap();
        assert!((overall - (ratio * sig + (1.0 - ratio) * bg)).abs() < 1e-12);
    }

    #[test]
    fn separated_scores_have_auc_one() {
        let samples: Vec<(f64, u8)> = vec![(0.9, 1), (0.8, 1), (0.3, 0), (0.1, 0)];
        let roc = roc_auc(&samples).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert_eq!(*roc.points.first().unwrap(), (0.0, 0.0));
        assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn all_ties_give_auc_half() {
        let samples: Vec<(f64, u8)> = vec![(0.5, 1), (0.5, 0), (0.5, 1), (0.5, 0)];
        let roc = roc_auc(&samples).unwrap();
        assert_eq!(roc.auc, 0.5);
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn single_class_is_an_error() {
        let samples: Vec<(f64, u8)> = vec![(0.5, 1), (0.4, 1)];
        assert!(matches!(roc_auc(&samples), Err(MetricError::SingleClass)));
    }

    #[test]
    fn trapezoid_matches_rank_statistic() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..100 {
            let mut samples: Vec<(f64, u8)> = (0..30)
                .map(|_| {
                    // Quantized scores force plenty of ties.
                    let s = (rng.next_f64() * 8.0).floor() / 8.0;
                    (s, (rng.next_u64() & 1) as u8)
                })
                .collect();
            // Ensure both classes are present.
            samples[0].1 = 0;
            samples[1].1 = 1;
            let roc = roc_auc(&samples).unwrap();
            let oracle = rank_auc(&samples);
            assert!((roc.auc - oracle).abs() < 1e-9, "{} vs {}", roc.auc, oracle);
        }
    }

    #[test]
    fn curve_is_monotone() {
        let mut rng = SplitMix64::new(3);
        let mut samples: Vec<(f64, u8)> = (0..50)
            .map(|_| (rng.next_f64(), (rng.next_u64() & 1) as u8))
            .collect();
        samples[0].1 = 0;
        samples[1].1 = 1;
        let roc = roc_auc(&samples).unwrap();
        for pair in roc.points.windows(2) {
            assert!(pair[1].0 >= pair[0].0);
            assert!(pair[1].1 >= pair[0].1);
        }
    }
}
