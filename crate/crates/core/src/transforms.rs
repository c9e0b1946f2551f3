//! Physically informed projections and perturbations.
//!
//! Jet features follow the detector convention: phi from the two-argument
//! arctangent (the quadrant-correct form of atan(p_y/p_x)) and
//! eta = atan(p_z/|p|). Both are taken relative to the jet axis computed
//! from the summed momentum vector, which makes (dphi, deta) invariant
//! under rotations about the beam axis.
//!
//! The structural descriptor is a species-pair Gaussian-smeared radial
//! distribution fingerprint. It keeps the properties the window-similarity
//! analysis relies on (rotation, translation, and atom-permutation
//! invariance plus cosine comparability) while staying cheap to compute.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::data::{JetDataset, JetEvent, MolecularFrame, Trajectory};
use crate::error::TransformError;
use crate::sampling::SliceResult;

/// Per-particle jet-frame features.
#[derive(Debug, Clone, PartialEq)]
pub struct JetFeatures {
    /// Constituent energies, GeV.
    pub energies: Vec<f64>,
    /// Azimuth relative to the jet axis, wrapped into (-pi, pi].
    pub dphi: Vec<f64>,
    /// Eta relative to the jet axis.
    pub deta: Vec<f64>,
    pub axis_phi: f64,
    pub axis_eta: f64,
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x % TAU;
    if y <= -PI {
        y += TAU;
    } else if y > PI {
        y -= TAU;
    }
    y
}

fn phi_eta(p: &[f64; 4]) -> Option<(f64, f64)> {
    let (px, py, pz) = (p[1], p[2], p[3]);
    let norm = (px * px + py * py + pz * pz).sqrt();
    if norm == 0.0 {
        return None;
    }
    Some((py.atan2(px), (pz / norm).atan()))
}

/// Project an event's 4-momenta onto (E, dphi, deta) around the jet axis.
pub fn project_jet_features(event: &JetEvent) -> Result<JetFeatures, TransformError> {
    let mut sum = [0.0f64; 3];
    for (index, p) in event.particles.iter().enumerate() {
        if phi_eta(p).is_none() {
            return Err(TransformError::ZeroMomentumParticle {
                event_id: event.event_id,
                index,
            });
        }
        sum[0] += p[1];
        sum[1] += p[2];
        sum[2] += p[3];
    }
    let axis = [0.0, sum[0], sum[1], sum[2]];
    let (axis_phi, axis_eta) = phi_eta(&axis).ok_or(TransformError::ZeroJetMomentum {
        event_id: event.event_id,
    })?;
    let mut features = JetFeatures {
        energies: Vec::with_capacity(event.particles.len()),
        dphi: Vec::with_capacity(event.particles.len()),
        deta: Vec::with_capacity(event.particles.len()),
        axis_phi,
        axis_eta,
    };
    for p in &event.particles {
        let (phi, eta) = phi_eta(p).expect("checked above");
        features.energies.push(p[0]);
        features.dphi.push(wrap_angle(phi - axis_phi));
        features.deta.push(eta - axis_eta);
    }
    Ok(features)
}

/// Rotate an event about the beam axis by `theta` radians.
///
/// Only (p_x, p_y) change; E, p_z, the label, and the jet energy carry
/// over unchanged.
pub fn rotate_event(event: &JetEvent, theta: f64) -> Result<JetEvent, TransformError> {
    if !theta.is_finite() {
        return Err(TransformError::NonFiniteAngle);
    }
    let (sin, cos) = theta.sin_cos();
    let particles = event
        .particles
        .iter()
        .map(|p| [p[0], p[1] * cos - p[2] * sin, p[1] * sin + p[2] * cos, p[3]])
        .collect();
    JetEvent::new(event.event_id, particles, event.label)
        .map_err(|_| TransformError::NonFiniteAngle)
}

/// Rotated copies of a dataset at angles k * step_deg for k in 0..count.
pub fn rotation_sweep(
    dataset: &JetDataset,
    step_deg: f64,
    count: usize,
) -> Result<Vec<(f64, JetDataset)>, TransformError> {
    let span = step_deg * count as f64;
    if span > 360.0 + 1e-9 {
        return Err(TransformError::SweepTooWide(span));
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let angle_deg = step_deg * k as f64;
        let theta = angle_deg.to_radians();
        let events = dataset
            .events()
            .iter()
            .map(|e| rotate_event(e, theta))
            .collect::<Result<Vec<_>, _>>()?;
        out.push((angle_deg, JetDataset::new(events).expect("ids preserved")));
    }
    Ok(out)
}

/// Parameters of the structural descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorParams {
    /// Radial range in Angstrom.
    pub r_cut: f64,
    pub n_bins: usize,
    /// Gaussian smearing width in Angstrom.
    pub sigma: f64,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        Self {
            r_cut: 6.0,
            n_bins: 24,
            sigma: 0.3,
        }
    }
}

impl DescriptorParams {
    pub fn validate(&self) -> Result<(), TransformError> {
        if !(self.r_cut > 0.0) {
            return Err(TransformError::InvalidParams(format!(
                "r_cut {} must be > 0",
                self.r_cut
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(TransformError::InvalidParams(format!(
                "sigma {} must be > 0",
                self.sigma
            )));
        }
        if self.n_bins < 4 {
            return Err(TransformError::InvalidParams(format!(
                "n_bins {} must be >= 4",
                self.n_bins
            )));
        }
        Ok(())
    }
}

/// A structural fingerprint: per species pair, a Gaussian-smeared radial
/// histogram over [0, r_cut]; blocks sorted by species pair and the whole
/// vector L2-normalized (unless all-zero).
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralDescriptor {
    pairs: Vec<(u32, u32)>,
    n_bins: usize,
    values: Vec<f64>,
}

impl StructuralDescriptor {
    /// Species pairs (a <= b) in block order.
    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    /// Concatenated blocks, pairs.len() * n_bins values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn block(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.n_bins..(idx + 1) * self.n_bins]
    }

    /// Cosine similarity with block alignment by species pair; pairs
    /// present on one side only contribute zeros. Both descriptors are
    /// unit vectors, so this is a dot product over shared pairs.
    pub fn cosine(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n_bins, other.n_bins);
        let mut dot = 0.0;
        let mut i = 0;
        let mut j = 0;
        while i < self.pairs.len() && j < other.pairs.len() {
            match self.pairs[i].cmp(&other.pairs[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += self
                        .block(i)
                        .iter()
                        .zip(other.block(j))
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                    i += 1;
                    j += 1;
                }
            }
        }
        dot
    }
}

/// Gaussian mass of N(center, sigma) inside [lo, hi).
fn gaussian_bin_mass(center: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let scale = 1.0 / (sigma * std::f64::consts::SQRT_2);
    0.5 * (libm::erf((hi - center) * scale) - libm::erf((lo - center) * scale))
}

/// Compute the structural descriptor of a frame.
pub fn structural_descriptor(
    frame: &MolecularFrame,
    params: &DescriptorParams,
) -> Result<StructuralDescriptor, TransformError> {
    params.validate()?;
    let n = frame.n_atoms();
    if n < 2 {
        return Err(TransformError::TooFewAtoms(frame.time_index));
    }
    let bin_width = params.r_cut / params.n_bins as f64;
    // Accumulate per species pair; every atom pair contributes its full
    // Gaussian mass that falls inside [0, r_cut].
    let mut blocks: BTreeMap<(u32, u32), Vec<f64>> = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (
                frame.species[i].min(frame.species[j]),
                frame.species[i].max(frame.species[j]),
            );
            let d = dist(&frame.positions[i], &frame.positions[j]);
            let block = blocks
                .entry((a, b))
                .or_insert_with(|| vec![0.0; params.n_bins]);
            for (k, slot) in block.iter_mut().enumerate() {
                let lo = k as f64 * bin_width;
                *slot += gaussian_bin_mass(d, params.sigma, lo, lo + bin_width);
            }
        }
    }
    let pairs: Vec<(u32, u32)> = blocks.keys().copied().collect();
    let mut values: Vec<f64> = blocks.into_values().flatten().collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut values {
            *v /= norm;
        }
    }
    Ok(StructuralDescriptor {
        pairs,
        n_bins: params.n_bins,
        values,
    })
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Read-mostly descriptor memo keyed by frame id. Lookups take the lock
/// briefly; descriptors are shared out as `Arc`s.
pub struct DescriptorCache {
    params: DescriptorParams,
    memo: Mutex<HashMap<i64, Arc<StructuralDescriptor>>>,
}

impl DescriptorCache {
    pub fn new(params: DescriptorParams) -> Self {
        Self {
            params,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &DescriptorParams {
        &self.params
    }

    pub fn get(&self, frame: &MolecularFrame) -> Result<Arc<StructuralDescriptor>, TransformError> {
        if let Some(d) = self.memo.lock().expect("cache lock").get(&frame.time_index) {
            return Ok(Arc::clone(d));
        }
        let d = Arc::new(structural_descriptor(frame, &self.params)?);
        let mut memo = self.memo.lock().expect("cache lock");
        Ok(Arc::clone(memo.entry(frame.time_index).or_insert(d)))
    }
}

/// Mean pairwise descriptor cosine similarity between two frame windows.
pub fn window_similarity(
    traj: &Trajectory,
    window_a: &SliceResult,
    window_b: &SliceResult,
    params: &DescriptorParams,
) -> Result<f64, TransformError> {
    let cache = DescriptorCache::new(*params);
    window_similarity_cached(traj, window_a, window_b, &cache)
}

/// [`window_similarity`] with an external cache, for grid scans that
/// revisit the same frames across many window pairs.
pub fn window_similarity_cached(
    traj: &Trajectory,
    window_a: &SliceResult,
    window_b: &SliceResult,
    cache: &DescriptorCache,
) -> Result<f64, TransformError> {
    if window_a.is_empty() || window_b.is_empty() {
        return Err(TransformError::EmptyWindow);
    }
    let lookup = |ids: &[i64]| -> Result<Vec<Arc<StructuralDescriptor>>, TransformError> {
        ids.iter()
            .map(|&id| {
                let frame = traj
                    .frame_by_time(id)
                    .ok_or(TransformError::UnknownFrame(id))?;
                cache.get(frame)
            })
            .collect()
    };
    let da = lookup(&window_a.sample_ids)?;
    let db = lookup(&window_b.sample_ids)?;
    let mut sum = 0.0;
    for a in &da {
        for b in &db {
            sum += a.cosine(b);
        }
    }
    Ok(sum / (da.len() * db.len()) as f64)
}
