//! Problem-space partitioning: time windows, window grids, seeded random
//! subsets, scalar-feature binning with equalized draws, and
//! threshold-responsive event subsets.
//!
//! All randomness goes through [`crate::rng`] so a slice is reproducible
//! from its seed alone, on any platform.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{PrecipEvent, PredictionSet, Trajectory};
use crate::error::SliceError;
use crate::rng::{derive_seed, SplitMix64};

/// Fractional ranks are nudged by this before flooring so that decimal
/// fractions like 0.6 + 0.3 land on the intended integer boundary.
const RANK_EPS: f64 = 1e-9;

/// A declarative problem-space partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SliceSpec {
    /// Frames with time-sorted rank r in [floor(start*M), floor((start+size)*M)).
    TimeWindow { start_frac: f64, size_frac: f64 },
    /// Uniform subset without replacement, by count or by fraction.
    RandomSubset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fraction: Option<f64>,
        seed: u64,
    },
    /// Equal-width bins over a scalar feature, keeping the selected bins.
    FeatureBins {
        feature: String,
        lo: f64,
        hi: f64,
        n_bins: usize,
        selected: Vec<usize>,
    },
    /// Events whose every lead frame responds to intensity threshold T.
    ThresholdResponsive { threshold: f64 },
}

impl SliceSpec {
    pub fn validate(&self) -> Result<(), SliceError> {
        match self {
            SliceSpec::TimeWindow {
                start_frac,
                size_frac,
            } => {
                if !(*start_frac >= 0.0 && *start_frac <= 1.0) {
                    return Err(SliceError::InvalidSpec(format!(
                        "start_frac {start_frac} outside [0,1]"
                    )));
                }
                if !(*size_frac > 0.0 && *size_frac <= 1.0) {
                    return Err(SliceError::InvalidSpec(format!(
                        "size_frac {size_frac} outside (0,1]"
                    )));
                }
                if start_frac + size_frac > 1.0 + RANK_EPS {
                    return Err(SliceError::InvalidSpec(format!(
                        "start_frac + size_frac = {} exceeds 1",
                        start_frac + size_frac
                    )));
                }
                Ok(())
            }
            SliceSpec::RandomSubset {
                count, fraction, ..
            } => match (count, fraction) {
                (Some(_), None) => Ok(()),
                (None, Some(f)) if *f > 0.0 && *f <= 1.0 => Ok(()),
                (None, Some(f)) => Err(SliceError::InvalidSpec(format!(
                    "fraction {f} outside (0,1]"
                ))),
                _ => Err(SliceError::InvalidSpec(
                    "random_subset needs exactly one of count or fraction".into(),
                )),
            },
            SliceSpec::FeatureBins {
                lo,
                hi,
                n_bins,
                selected,
                ..
            } => {
                if !(lo < hi) {
                    return Err(SliceError::InvalidSpec(format!(
                        "lo {lo} must be < hi {hi}"
                    )));
                }
                if *n_bins == 0 {
                    return Err(SliceError::InvalidSpec("n_bins must be >= 1".into()));
                }
                if let Some(&bad) = selected.iter().find(|&&k| k >= *n_bins) {
                    return Err(SliceError::InvalidSpec(format!(
                        "selected bin {bad} outside [0, {n_bins})"
                    )));
                }
                Ok(())
            }
            SliceSpec::ThresholdResponsive { threshold } => {
                if threshold.is_finite() {
                    Ok(())
                } else {
                    Err(SliceError::InvalidSpec("threshold must be finite".into()))
                }
            }
        }
    }
}

/// Where a slice came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub dataset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A materialized slice: the spec plus the sample ids it selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub spec: SliceSpec,
    /// Unique ids, sorted ascending.
    pub sample_ids: Vec<i64>,
    pub provenance: Provenance,
}

impl SliceResult {
    pub fn with_dataset(mut self, dataset_id: impl Into<String>) -> Self {
        self.provenance.dataset_id = dataset_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }
}

/// Rank bounds [lo, hi) of a fractional window over m samples.
fn window_ranks(start_frac: f64, size_frac: f64, m: usize) -> (usize, usize) {
    let lo = (start_frac * m as f64 + RANK_EPS).floor() as usize;
    let hi = ((start_frac + size_frac) * m as f64 + RANK_EPS).floor() as usize;
    (lo.min(m), hi.min(m))
}

/// Select the frames whose time-sorted rank falls in the fractional window.
pub fn time_window_slice(
    traj: &Trajectory,
    start_frac: f64,
    size_frac: f64,
) -> Result<SliceResult, SliceError> {
    let spec = SliceSpec::TimeWindow {
        start_frac,
        size_frac,
    };
    spec.validate()?;
    let (lo, hi) = window_ranks(start_frac, size_frac, traj.len());
    if lo >= hi {
        return Err(SliceError::EmptyWindow {
            start_frac,
            size_frac,
        });
    }
    let sample_ids = traj.frames()[lo..hi].iter().map(|f| f.time_index).collect();
    Ok(SliceResult {
        spec,
        sample_ids,
        provenance: Provenance {
            dataset_id: traj.molecule_name.clone(),
            seed: None,
        },
    })
}

/// Cartesian window grid filtered by `start + size <= max_end`,
/// enumerated size-major then start.
pub fn window_grid(
    sizes: &[f64],
    starts: &[f64],
    max_end: f64,
) -> Result<Vec<SliceSpec>, SliceError> {
    for &v in sizes.iter() {
        if !(v > 0.0 && v <= 1.0) {
            return Err(SliceError::InvalidSpec(format!(
                "window size {v} outside (0,1]"
            )));
        }
    }
    for &v in starts.iter() {
        if !(0.0..=1.0).contains(&v) {
            return Err(SliceError::InvalidSpec(format!(
                "window start {v} outside [0,1]"
            )));
        }
    }
    let mut windows = Vec::new();
    for &size in sizes {
        for &start in starts {
            if start + size <= max_end + RANK_EPS {
                windows.push(SliceSpec::TimeWindow {
                    start_frac: start,
                    size_frac: size,
                });
            }
        }
    }
    if windows.is_empty() {
        return Err(SliceError::EmptyGrid);
    }
    Ok(windows)
}

/// Subset size requested either as an absolute count or a fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetSize {
    Count(usize),
    Fraction(f64),
}

/// Uniform subset without replacement over the (deduplicated) id list.
///
/// Deterministic given the id order and seed; the output is sorted by id.
/// For a fixed seed, larger counts extend smaller ones (nested subsets).
pub fn random_subsample(
    ids: &[i64],
    size: SubsetSize,
    seed: u64,
) -> Result<SliceResult, SliceError> {
    let mut seen = BTreeSet::new();
    let population: Vec<i64> = ids.iter().copied().filter(|id| seen.insert(*id)).collect();
    let n = population.len();
    let (count, spec) = match size {
        SubsetSize::Count(c) => (
            c,
            SliceSpec::RandomSubset {
                count: Some(c),
                fraction: None,
                seed,
            },
        ),
        SubsetSize::Fraction(f) => {
            let spec = SliceSpec::RandomSubset {
                count: None,
                fraction: Some(f),
                seed,
            };
            spec.validate()?;
            ((f * n as f64).round() as usize, spec)
        }
    };
    if count > n {
        return Err(SliceError::CountExceedsPopulation {
            count,
            population: n,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut sample_ids: Vec<i64> = rng
        .sample_indices(n, count)
        .into_iter()
        .map(|i| population[i])
        .collect();
    sample_ids.sort_unstable();
    Ok(SliceResult {
        spec,
        sample_ids,
        provenance: Provenance {
            dataset_id: String::new(),
            seed: Some(seed),
        },
    })
}

/// Equal-width bins over a scalar feature, with id lists per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedValues {
    pub feature: String,
    pub lo: f64,
    pub hi: f64,
    pub n_bins: usize,
    bins: BTreeMap<usize, Vec<i64>>,
}

impl BinnedValues {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n_bins as f64
    }

    pub fn bins(&self) -> &BTreeMap<usize, Vec<i64>> {
        &self.bins
    }

    pub fn bin(&self, k: usize) -> &[i64] {
        self.bins.get(&k).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..self.n_bins).map(|k| self.bin(k).len()).collect()
    }
}

/// Bin (id, value) pairs into `n_bins` equal-width bins over [lo, hi].
///
/// Bin k covers [lo + k*w, lo + (k+1)*w); the last bin is closed above so
/// `hi` itself lands in bin n_bins-1. Values outside [lo, hi] are an
/// error carrying the offending ids, never silently dropped or clamped.
pub fn bin_by_scalar(
    feature: &str,
    values: &[(i64, f64)],
    lo: f64,
    hi: f64,
    n_bins: usize,
) -> Result<BinnedValues, SliceError> {
    SliceSpec::FeatureBins {
        feature: feature.to_string(),
        lo,
        hi,
        n_bins,
        selected: vec![],
    }
    .validate()?;
    let w = (hi - lo) / n_bins as f64;
    let mut bins: BTreeMap<usize, Vec<i64>> = (0..n_bins).map(|k| (k, Vec::new())).collect();
    let mut out_of_range = Vec::new();
    for &(id, v) in values {
        if !v.is_finite() || v < lo || v > hi {
            out_of_range.push(id);
            continue;
        }
        let k = if v == hi {
            n_bins - 1
        } else {
            (((v - lo) / w).floor() as usize).min(n_bins - 1)
        };
        bins.get_mut(&k).expect("bin exists").push(id);
    }
    if !out_of_range.is_empty() {
        return Err(SliceError::OutOfRange(out_of_range.len(), out_of_range));
    }
    Ok(BinnedValues {
        feature: feature.to_string(),
        lo,
        hi,
        n_bins,
        bins,
    })
}

/// Draw an equal number of samples from each selected bin.
///
/// `total` is split as floor(total/k) per bin with the remainder going to
/// the lowest-index selected bins (+1 each). Draws are uniform within a
/// bin, with each bin on its own derived stream, so the result is
/// deterministic per seed and unchanged by adding other bins.
pub fn equalized_bin_sample(
    binned: &BinnedValues,
    selected: &[usize],
    total: usize,
    seed: u64,
) -> Result<SliceResult, SliceError> {
    let mut sel: Vec<usize> = selected.to_vec();
    sel.sort_unstable();
    sel.dedup();
    if sel.is_empty() {
        return Err(SliceError::InvalidSpec("no bins selected".into()));
    }
    for &k in &sel {
        if k >= binned.n_bins {
            return Err(SliceError::UnknownBin(k));
        }
    }
    let k = sel.len();
    let base = total / k;
    let rem = total % k;
    let mut sample_ids = Vec::with_capacity(total);
    for (rank, &bin) in sel.iter().enumerate() {
        let quota = base + usize::from(rank < rem);
        let members = binned.bin(bin);
        if members.len() < quota {
            return Err(SliceError::InsufficientBin {
                bin,
                got: members.len(),
                needed: quota,
            });
        }
        let mut rng = SplitMix64::new(derive_seed(seed, bin as u64));
        sample_ids.extend(
            rng.sample_indices(members.len(), quota)
                .into_iter()
                .map(|i| members[i]),
        );
    }
    sample_ids.sort_unstable();
    Ok(SliceResult {
        spec: SliceSpec::FeatureBins {
            feature: binned.feature.clone(),
            lo: binned.lo,
            hi: binned.hi,
            n_bins: binned.n_bins,
            selected: sel,
        },
        sample_ids,
        provenance: Provenance {
            dataset_id: String::new(),
            seed: Some(seed),
        },
    })
}

/// Does every one of the event's lead frames have at least one pixel at
/// or above `threshold` in ground truth or prediction?
pub fn event_is_responsive(
    event: &PrecipEvent,
    pred_frames: &[crate::data::Grid],
    threshold: f64,
) -> bool {
    (0..event.output_len()).all(|lead| {
        let gt = event.output_frame(lead);
        let pd = &pred_frames[lead];
        gt.as_slice().iter().any(|&v| v >= threshold)
            || pd.as_slice().iter().any(|&v| v >= threshold)
    })
}

/// Keep exactly the events where each lead frame responds to T: no frame
/// of the event may have all of A, B, C zero at that threshold.
pub fn threshold_responsive_subset(
    events: &[PrecipEvent],
    preds: &PredictionSet,
    threshold: f64,
) -> Result<SliceResult, SliceError> {
    let mut sample_ids = Vec::new();
    for ev in events {
        let frames = preds.validate_frames_for(ev).map_err(|e| match e {
            crate::error::DataError::MissingPrediction(id) => SliceError::MissingPrediction(id),
            other => SliceError::Data(other),
        })?;
        if event_is_responsive(ev, frames, threshold) {
            sample_ids.push(ev.event_id);
        }
    }
    sample_ids.sort_unstable();
    Ok(SliceResult {
        spec: SliceSpec::ThresholdResponsive { threshold },
        sample_ids,
        provenance: Provenance::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Grid, MolecularFrame, Prediction};

    fn toy_traj(m: usize) -> Trajectory {
        let frames = (0..m)
            .map(|t| MolecularFrame {
                time_index: t as i64,
                species: vec![1],
                positions: vec![[t as f64, 0.0, 0.0]],
                energy: None,
                forces: None,
            })
            .collect();
        Trajectory::new("toy", frames).unwrap()
    }

    #[test]
    fn window_first_90_of_100() {
        let traj = toy_traj(100);
        let s = time_window_slice(&traj, 0.0, 0.90).unwrap();
        assert_eq!(s.sample_ids.len(), 90);
        assert_eq!(*s.sample_ids.first().unwrap(), 0);
        assert_eq!(*s.sample_ids.last().unwrap(), 89);
    }

    #[test]
    fn window_60_to_90_of_100() {
        let traj = toy_traj(100);
        let s = time_window_slice(&traj, 0.60, 0.30).unwrap();
        assert_eq!(s.sample_ids, (60..=89).collect::<Vec<i64>>());
    }

    #[test]
    fn window_floor_rule_m7() {
        // floor(0.5*7) = 3, floor(1.0*7) = 7 -> ranks 3..6.
        let traj = toy_traj(7);
        let s = time_window_slice(&traj, 0.5, 0.5).unwrap();
        assert_eq!(s.sample_ids, vec![3, 4, 5, 6]);
    }

    #[test]
    fn window_full_returns_all() {
        let traj = toy_traj(13);
        let s = time_window_slice(&traj, 0.0, 1.0).unwrap();
        assert_eq!(s.sample_ids.len(), 13);
    }

    #[test]
    fn empty_window_is_an_error() {
        let traj = toy_traj(3);
        assert!(matches!(
            time_window_slice(&traj, 0.1, 0.01),
            Err(SliceError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn grid_scan_yields_15_windows() {
        let sizes = [0.30, 0.45, 0.60, 0.75, 0.90];
        let starts = [0.0, 0.15, 0.30, 0.45, 0.60];
        let grid = window_grid(&sizes, &starts, 0.90).unwrap();
        // Enumeration: 5 + 4 + 3 + 2 + 1 pairs satisfy start + size <= 0.9.
        assert_eq!(grid.len(), 15);
        // Size-major order: the first five share size 0.30.
        for spec in &grid[..5] {
            match spec {
                SliceSpec::TimeWindow { size_frac, .. } => assert_eq!(*size_frac, 0.30),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn grid_scan_single_and_empty() {
        assert_eq!(window_grid(&[0.90], &[0.0], 0.90).unwrap().len(), 1);
        assert!(matches!(
            window_grid(&[0.5], &[0.6], 0.9),
            Err(SliceError::EmptyGrid)
        ));
    }

    #[test]
    fn subsample_full_fraction_is_identity() {
        let ids: Vec<i64> = (0..100).collect();
        let s = random_subsample(&ids, SubsetSize::Fraction(1.0), 3).unwrap();
        assert_eq!(s.sample_ids, ids);
    }

    #[test]
    fn subsample_is_deterministic() {
        let ids: Vec<i64> = (0..100).collect();
        let a = random_subsample(&ids, SubsetSize::Count(10), 7).unwrap();
        let b = random_subsample(&ids, SubsetSize::Count(10), 7).unwrap();
        assert_eq!(a.sample_ids, b.sample_ids);
        let c = random_subsample(&ids, SubsetSize::Count(10), 8).unwrap();
        assert_ne!(a.sample_ids, c.sample_ids);
    }

    #[test]
    fn subsample_ignores_duplicates() {
        let ids: Vec<i64> = (0..50).collect();
        let mut doubled = ids.clone();
        doubled.extend_from_slice(&ids);
        let a = random_subsample(&ids, SubsetSize::Count(20), 11).unwrap();
        let b = random_subsample(&doubled, SubsetSize::Count(20), 11).unwrap();
        assert_eq!(a.sample_ids, b.sample_ids);
    }

    #[test]
    fn subsample_count_too_large_errors() {
        let ids: Vec<i64> = (0..10).collect();
        assert!(matches!(
            random_subsample(&ids, SubsetSize::Count(11), 0),
            Err(SliceError::CountExceedsPopulation {
                count: 11,
                population: 10
            })
        ));
    }

    #[test]
    fn subsample_inclusion_frequency_is_uniform() {
        // 10000 ids at fraction 0.05 must select exactly 500, and the
        // per-id inclusion frequency must concentrate around 0.05.
        // 20000 seeds put the binomial sd at ~0.0015, so the +-0.01 band
        // is ~6.5 sigma wide and the check is statistically sound.
        let ids: Vec<i64> = (0..10_000).collect();
        let trials = 20_000u32;
        let mut hits = vec![0u32; ids.len()];
        for seed in 0..trials {
            let s = random_subsample(&ids, SubsetSize::Fraction(0.05), seed as u64).unwrap();
            assert_eq!(s.sample_ids.len(), 500);
            for &id in &s.sample_ids {
                hits[id as usize] += 1;
            }
        }
        for (id, &h) in hits.iter().enumerate() {
            let freq = h as f64 / trials as f64;
            assert!(
                (freq - 0.05).abs() <= 0.01,
                "id {id}: inclusion frequency {freq}"
            );
        }
    }

    #[test]
    fn bin_width_matches_paper_setup() {
        let values: Vec<(i64, f64)> = vec![(0, 550.0), (1, 2440.0)];
        let b = bin_by_scalar("jet_energy", &values, 550.0, 2440.0, 8).unwrap();
        assert_eq!(b.width(), 236.25);
        assert_eq!(b.bin(0), &[0]);
        assert_eq!(b.bin(7), &[1]);
    }

    #[test]
    fn bin_counts_sum_to_input() {
        let mut rng = SplitMix64::new(42);
        let values: Vec<(i64, f64)> = (0..1000)
            .map(|i| (i, 550.0 + rng.next_f64() * (2440.0 - 550.0)))
            .collect();
        let b = bin_by_scalar("jet_energy", &values, 550.0, 2440.0, 8).unwrap();
        assert_eq!(b.counts().iter().sum::<usize>(), 1000);
    }

    #[test]
    fn out_of_range_values_are_reported() {
        let values = vec![(7, 100.0), (8, 550.0), (9, 3000.0)];
        match bin_by_scalar("e", &values, 550.0, 2440.0, 8) {
            Err(SliceError::OutOfRange(n, ids)) => {
                assert_eq!(n, 2);
                assert_eq!(ids, vec![7, 9]);
            }
            other => panic!("expected out-of-range error, got {other:?}"),
        }
    }

    #[test]
    fn single_bin_holds_everything() {
        let values: Vec<(i64, f64)> = (0..10).map(|i| (i, i as f64)).collect();
        let b = bin_by_scalar("x", &values, 0.0, 9.0, 1).unwrap();
        assert_eq!(b.bin(0).len(), 10);
    }

    fn binned_fixture(per_bin: usize, n_bins: usize) -> BinnedValues {
        let w = 1.0;
        let values: Vec<(i64, f64)> = (0..per_bin * n_bins)
            .map(|i| {
                let bin = i % n_bins;
                (i as i64, bin as f64 * w + 0.5)
            })
            .collect();
        bin_by_scalar("x", &values, 0.0, n_bins as f64, n_bins).unwrap()
    }

    #[test]
    fn equalized_sample_splits_evenly() {
        let b = binned_fixture(10, 2);
        let s = equalized_bin_sample(&b, &[0, 1], 10, 5).unwrap();
        assert_eq!(s.sample_ids.len(), 10);
        let in_bin0 = s.sample_ids.iter().filter(|&&id| id % 2 == 0).count();
        assert_eq!(in_bin0, 5);
    }

    #[test]
    fn equalized_sample_remainder_rule() {
        // 3 bins, total 10 -> quotas (4, 3, 3).
        let b = binned_fixture(10, 3);
        let s = equalized_bin_sample(&b, &[0, 1, 2], 10, 5).unwrap();
        let count_in = |bin: i64| s.sample_ids.iter().filter(|&&id| id % 3 == bin).count();
        assert_eq!((count_in(0), count_in(1), count_in(2)), (4, 3, 3));
    }

    #[test]
    fn equalized_sample_no_duplicates() {
        let b = binned_fixture(1000, 4);
        let s = equalized_bin_sample(&b, &[0, 1, 2, 3], 400, 1).unwrap();
        assert_eq!(s.sample_ids.len(), 400);
        let unique: BTreeSet<i64> = s.sample_ids.iter().copied().collect();
        assert_eq!(unique.len(), 400);
        for bin in 0..4 {
            assert_eq!(
                s.sample_ids.iter().filter(|&&id| id % 4 == bin).count(),
                100
            );
        }
    }

    #[test]
    fn equalized_sample_insufficient_bin() {
        let b = binned_fixture(3, 2);
        assert!(matches!(
            equalized_bin_sample(&b, &[0, 1], 10, 0),
            Err(SliceError::InsufficientBin {
                bin: 0,
                got: 3,
                needed: 5
            })
        ));
    }

    fn blob_event(event_id: i64, peak: f64, f: usize) -> PrecipEvent {
        let mut frames = Vec::new();
        for _ in 0..1 + f {
            let mut g = Grid::zeros(4, 4);
            g.set(1, 1, peak);
            frames.push(g);
        }
        PrecipEvent::new(event_id, frames, 1, f).unwrap()
    }

    fn zero_pred(id: i64, f: usize) -> PredictionSet {
        let mut preds = PredictionSet::new("zero", "r0", 0);
        preds.entries.insert(
            id,
            Prediction::Frames {
                frames: vec![Grid::zeros(4, 4); f],
            },
        );
        preds
    }

    #[test]
    fn all_zero_event_is_excluded() {
        let ev = blob_event(1, 0.0, 3);
        let preds = zero_pred(1, 3);
        let s = threshold_responsive_subset(std::slice::from_ref(&ev), &preds, 1.0).unwrap();
        assert!(s.sample_ids.is_empty());
    }

    #[test]
    fn gt_at_threshold_is_included_regardless_of_prediction() {
        let ev = blob_event(1, 16.0, 3);
        let preds = zero_pred(1, 3);
        let s = threshold_responsive_subset(std::slice::from_ref(&ev), &preds, 16.0).unwrap();
        assert_eq!(s.sample_ids, vec![1]);
    }

    #[test]
    fn responsive_subset_matches_brute_force_and_is_monotone() {
        let mut rng = SplitMix64::new(9);
        let mut events = Vec::new();
        let mut preds = PredictionSet::new("noise", "r0", 0);
        for id in 0..50 {
            let peak = rng.next_f64() * 40.0;
            events.push(blob_event(id, peak, 4));
            let mut frames = Vec::new();
            for _ in 0..4 {
                let mut g = Grid::zeros(4, 4);
                g.set(2, 2, rng.next_f64() * 40.0);
                frames.push(g);
            }
            preds.entries.insert(id, Prediction::Frames { frames });
        }
        let subset = threshold_responsive_subset(&events, &preds, 16.0).unwrap();
        // Brute force: per-frame A+B+C scan.
        let mut expected = Vec::new();
        for ev in &events {
            let pf = preds.validate_frames_for(ev).unwrap();
            let ok = (0..ev.output_len()).all(|lead| {
                let gt = ev.output_frame(lead);
                let pd = &pf[lead];
                let mut abc = 0usize;
                for (i, j, g) in gt.pixels() {
                    let p = pd.get(i, j);
                    if g >= 16.0 || p >= 16.0 {
                        abc += 1;
                    }
                }
                abc > 0
            });
            if ok {
                expected.push(ev.event_id);
            }
        }
        assert_eq!(subset.sample_ids, expected);
        // Monotone non-increasing in T.
        let mut prev = subset.sample_ids.len();
        for t in [20.0, 30.0, 45.0] {
            let s = threshold_responsive_subset(&events, &preds, t).unwrap();
            assert!(s.sample_ids.len() <= prev);
            prev = s.sample_ids.len();
        }
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let ev = blob_event(5, 20.0, 2);
        let preds = PredictionSet::new("none", "r0", 0);
        assert!(matches!(
            threshold_responsive_subset(std::slice::from_ref(&ev), &preds, 16.0),
            Err(SliceError::MissingPrediction(5))
        ));
    }
}
