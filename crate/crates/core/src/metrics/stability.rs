//! Prediction stability analysis for stochastic models: repeat runs per
//! event, per-lead metric distributions, adaptive histograms, and Tukey
//! outlier flags.

use serde::{Deserialize, Serialize};

use crate::data::{Grid, PrecipEvent};
use crate::error::MetricError;
use crate::metrics::correlation::histogram;
use crate::metrics::precip::{com_displacement, raw_mae};
use crate::report::Histogram;
use crate::rng::derive_seed;

pub const STABILITY_HISTOGRAM_BINS: usize = 16;

/// Which per-frame metric to track across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMetric {
    Mae,
    ComDisplacement,
}

/// Distribution of one metric at one lead time over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadStability {
    pub lead: usize,
    /// One value per run, in run order.
    pub samples: Vec<f64>,
    /// 16 bins over this distribution's own range; counts sum to runs.
    pub histogram: Histogram,
    /// Runs outside the Tukey fences [Q1 - 1.5 IQR, Q3 + 1.5 IQR].
    pub outlier_runs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStability {
    pub event_id: i64,
    pub per_lead: Vec<LeadStability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub metric: StabilityMetric,
    pub runs: usize,
    pub lead_times: Vec<usize>,
    pub events: Vec<EventStability>,
}

/// Linear-interpolation quantile (the h = (n-1)p convention) of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn tukey_outliers(samples: &[f64]) -> Vec<usize> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metric values"));
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    samples
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v < lo || v > hi)
        .map(|(run, _)| run)
        .collect()
}

/// Run a stochastic predictor `runs` times per event and summarize the
/// metric distribution per (event, lead time).
///
/// The predictor receives the event and a per-run seed derived from
/// `base_seed`; a deterministic predictor simply ignores it. A failing
/// run aborts the analysis with its run index.
pub fn stability_analysis<P>(
    predict: P,
    events: &[PrecipEvent],
    runs: usize,
    metric: StabilityMetric,
    lead_times: &[usize],
    base_seed: u64,
) -> Result<StabilityResult, MetricError>
where
    P: Fn(&PrecipEvent, u64) -> Result<Vec<Grid>, String>,
{
    if runs < 2 {
        return Err(MetricError::TooFewRuns(runs));
    }
    for ev in events {
        for &lead in lead_times {
            if lead >= ev.output_len() {
                return Err(MetricError::IndexOutOfRange(
                    lead as i64,
                    format!(
                        "event {} has {} forecast leads",
                        ev.event_id,
                        ev.output_len()
                    ),
                ));
            }
        }
    }
    // samples[event][lead][run]
    let mut samples = vec![vec![vec![0.0f64; runs]; lead_times.len()]; events.len()];
    for run in 0..runs {
        let seed = derive_seed(base_seed, run as u64);
        for (e, ev) in events.iter().enumerate() {
            let frames =
                predict(ev, seed).map_err(|detail| MetricError::PredictorRun { run, detail })?;
            if frames.len() < ev.output_len() {
                return Err(MetricError::PredictorRun {
                    run,
                    detail: format!(
                        "predictor returned {} frames, event {} needs {}",
                        frames.len(),
                        ev.event_id,
                        ev.output_len()
                    ),
                });
            }
            for (l, &lead) in lead_times.iter().enumerate() {
                let gt = ev.output_frame(lead);
                let pd = &frames[lead];
                let value = match metric {
                    StabilityMetric::Mae => raw_mae(gt, pd)?,
                    StabilityMetric::ComDisplacement => com_displacement(gt, pd)?.delta_r,
                };
                samples[e][l][run] = value;
            }
        }
    }
    let events_out = events
        .iter()
        .enumerate()
        .map(|(e, ev)| {
            let per_lead = lead_times
                .iter()
                .enumerate()
                .map(|(l, &lead)| {
                    let s = std::mem::take(&mut samples[e][l]);
                    let hist = histogram(&s, STABILITY_HISTOGRAM_BINS, None, None)
                        .expect("non-empty sample set");
                    let outlier_runs = tukey_outliers(&s);
                    LeadStability {
                        lead,
                        samples: s,
                        histogram: hist,
                        outlier_runs,
                    }
                })
                .collect();
            EventStability {
                event_id: ev.event_id,
                per_lead,
            }
        })
        .collect();
    Ok(StabilityResult {
        metric,
        runs,
        lead_times: lead_times.to_vec(),
        events: events_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn moving_event(id: i64, f: usize) -> PrecipEvent {
        let mut frames = Vec::new();
        for t in 0..2 + f {
            let mut g = Grid::zeros(12, 12);
            g.set(4, 2 + t, 10.0);
            frames.push(g);
        }
        PrecipEvent::new(id, frames, 2, f).unwrap()
    }

    fn noisy_predictor(amp: f64) -> impl Fn(&PrecipEvent, u64) -> Result<Vec<Grid>, String> {
        move |ev, seed| {
            let mut rng = SplitMix64::new(seed);
            Ok(ev
                .output_frames()
                .iter()
                .map(|g| {
                    let data = g
                        .as_slice()
                        .iter()
                        .map(|&v| (v + amp * rng.next_gaussian()).max(0.0))
                        .collect();
                    Grid::from_vec(g.h(), g.w(), data).unwrap()
                })
                .collect())
        }
    }

    #[test]
    fn deterministic_predictor_has_no_spread_and_no_outliers() {
        let events: Vec<PrecipEvent> = (0..3).map(|id| moving_event(id, 4)).collect();
        let echo = |ev: &PrecipEvent, _seed: u64| Ok(ev.output_frames().to_vec());
        let r = stability_analysis(echo, &events, 10, StabilityMetric::Mae, &[0, 3], 42).unwrap();
        for ev in &r.events {
            for lead in &ev.per_lead {
                assert!(lead.samples.iter().all(|&v| v == 0.0));
                assert_eq!(lead.histogram.total(), 10);
                assert!(lead.outlier_runs.is_empty());
            }
        }
    }

    #[test]
    fn histograms_have_16_bins_summing_to_runs() {
        let events: Vec<PrecipEvent> = (0..2).map(|id| moving_event(id, 3)).collect();
        let r = stability_analysis(
            noisy_predictor(0.5),
            &events,
            100,
            StabilityMetric::Mae,
            &[0, 1, 2],
            7,
        )
        .unwrap();
        for ev in &r.events {
            for lead in &ev.per_lead {
                assert_eq!(lead.histogram.n_bins(), 16);
                assert_eq!(lead.histogram.total(), 100);
            }
        }
    }

    #[test]
    fn spread_grows_with_noise_amplitude() {
        let events = vec![moving_event(0, 3)];
        let spread_of = |amp: f64| {
            let r = stability_analysis(
                noisy_predictor(amp),
                &events,
                50,
                StabilityMetric::Mae,
                &[1],
                9,
            )
            .unwrap();
            let s = &r.events[0].per_lead[0].samples;
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
        };
        let low = spread_of(0.1);
        let high = spread_of(1.0);
        assert!(high > low, "spread {high} should exceed {low}");
    }

    #[test]
    fn failing_run_reports_run_index() {
        let events = vec![moving_event(0, 2)];
        let flaky = |_: &PrecipEvent, _seed: u64| Err("backend gone".to_string());
        match stability_analysis(flaky, &events, 5, StabilityMetric::Mae, &[0], 1) {
            Err(MetricError::PredictorRun { run: 0, detail }) => assert_eq!(detail, "backend gone"),
            other => panic!("expected run failure, got {other:?}"),
        }
    }

    #[test]
    fn com_displacement_metric_uses_delta_r() {
        let events = vec![moving_event(0, 2)];
        // Shift every prediction one column right: delta_r is exactly 1.
        let shifted = |ev: &PrecipEvent, _seed: u64| {
            Ok(ev
                .output_frames()
                .iter()
                .map(|g| {
                    let mut out = Grid::zeros(g.h(), g.w());
                    for (i, j, v) in g.pixels() {
                        if v > 0.0 {
                            out.set(i, j + 1, v);
                        }
                    }
                    out
                })
                .collect())
        };
        let r = stability_analysis(
            shifted,
            &events,
            4,
            StabilityMetric::ComDisplacement,
            &[0, 1],
            3,
        )
        .unwrap();
        for lead in &r.events[0].per_lead {
            assert!(lead.samples.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn tukey_fences_flag_planted_outlier() {
        let mut samples = vec![1.0; 20];
        samples[7] = 50.0;
        assert_eq!(tukey_outliers(&samples), vec![7]);
    }
}
