//! Pairwise correlation with a least-squares line, and fixed-width
//! histograms.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::report::Histogram;

/// Pearson correlation plus the least-squares line of y on x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub x_name: String,
    pub y_name: String,
    pub n: usize,
    pub pearson_r: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// Fit y on x. Needs n >= 2 and nonzero variance in x; a constant y
/// yields r = 0 with an exact horizontal fit.
pub fn pearson_linfit(
    x_name: &str,
    y_name: &str,
    points: &[(f64, f64)],
) -> Result<CorrelationResult, MetricError> {
    let n = points.len();
    if n < 2 {
        return Err(MetricError::EmptyInput);
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(MetricError::DegenerateVariance);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let pearson_r = if syy == 0.0 {
        0.0
    } else {
        sxy / (sxx.sqrt() * syy.sqrt())
    };
    Ok(CorrelationResult {
        x_name: x_name.to_string(),
        y_name: y_name.to_string(),
        n,
        pearson_r,
        slope,
        intercept,
    })
}

/// Fixed-width histogram; the last bin is closed above.
///
/// With `lo`/`hi` omitted the range comes from the data min/max; an
/// all-equal sample widens the degenerate range by a unit bin width so
/// everything lands in one occupied bin. Values outside an explicit
/// range are dropped.
pub fn histogram(
    values: &[f64],
    n_bins: usize,
    lo: Option<f64>,
    hi: Option<f64>,
) -> Result<Histogram, MetricError> {
    if n_bins == 0 {
        return Err(MetricError::EmptyInput);
    }
    let (lo, hi) = match (lo, hi) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            if values.is_empty() {
                return Err(MetricError::EmptyHistogramInput);
            }
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for &v in values {
                min = min.min(v);
                max = max.max(v);
            }
            (lo.unwrap_or(min), hi.unwrap_or(max))
        }
    };
    let hi = if hi > lo { hi } else { lo + n_bins as f64 };
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let k = if v == hi {
            n_bins - 1
        } else {
            (((v - lo) / width).floor() as usize).min(n_bins - 1)
        };
        counts[k] += 1;
    }
    Ok(Histogram {
        lo,
        bin_width: width,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn exact_line_recovers_coefficients() {
        let points: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let fit = pearson_linfit("x", "y", &points).unwrap();
        assert!((fit.pearson_r - 1.0).abs() < 1e-12);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anticorrelated_line() {
        let points: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, -(i as f64))).collect();
        let fit = pearson_linfit("x", "y", &points).unwrap();
        assert!((fit.pearson_r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_covariance_formula_oracle() {
        let mut rng = SplitMix64::new(61);
        let points: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.next_gaussian(), rng.next_gaussian() * 2.0 + 0.5))
            .collect();
        let fit = pearson_linfit("x", "y", &points).unwrap();
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let cov = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n;
        let vx = points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n;
        let vy = points.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n;
        assert!((fit.pearson_r - cov / (vx.sqrt() * vy.sqrt())).abs() < 1e-12);
        assert!((fit.slope - cov / vx).abs() < 1e-12);
        assert!((fit.intercept - (my - fit.slope * mx)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_x_variance_is_an_error() {
        let points = vec![(1.0, 0.0), (1.0, 5.0), (1.0, 9.0)];
        assert!(matches!(
            pearson_linfit("x", "y", &points),
            Err(MetricError::DegenerateVariance)
        ));
    }

    #[test]
    fn histogram_two_values_two_bins() {
        let h = histogram(&[0.0, 1.0], 2, None, None).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
    }

    #[test]
    fn histogram_all_equal_widens_range() {
        let h = histogram(&[3.0; 7], 4, None, None).unwrap();
        assert_eq!(h.total(), 7);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn histogram_counts_sum_to_input() {
        let mut rng = SplitMix64::new(71);
        let values: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
        let h = histogram(&values, 16, None, None).unwrap();
        assert_eq!(h.total(), 1000);
    }

    #[test]
    fn histogram_empty_without_range_is_an_error() {
        assert!(matches!(
            histogram(&[], 4, None, None),
            Err(MetricError::EmptyHistogramInput)
        ));
        assert_eq!(histogram(&[], 4, Some(0.0), Some(1.0)).unwrap().total(), 0);
    }
}
