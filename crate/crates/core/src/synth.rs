//! Seeded toy generators and trivially correct toy predictors.
//!
//! The generators produce desk-scale datasets with closed-form structure
//! (harmonic labels, balanced jet classes, advected Gaussian blobs) so
//! metric kernels and sweep plumbing can be checked against analytic
//! oracles. The toy predictors are intentionally simple stand-ins for
//! real models: a descriptor-nearest-neighbor force model, a linear
//! discriminant tagger on projected jet features, and a center-of-mass
//! advection extrapolator.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{
    Grid, JetDataset, JetEvent, MolecularFrame, PrecipEvent, Prediction, PredictionSet, Trajectory,
};
use crate::error::SynthError;
use crate::metrics::center_of_mass;
use crate::rng::{derive_seed, SplitMix64};
use crate::transforms::{
    project_jet_features, structural_descriptor, DescriptorParams, StructuralDescriptor,
};

// ---------------------------------------------------------------------------
// Molecular toy trajectory

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdToyParams {
    pub n_atoms: usize,
    /// Spring constant k in eV/A^2.
    pub spring_constant: f64,
    /// Equilibrium geometry; defaults to atoms spaced 1.5 A along x.
    #[serde(default)]
    pub equilibrium: Option<Vec<[f64; 3]>>,
    /// Atomic numbers; defaults to cycling H, C, O.
    #[serde(default)]
    pub species: Option<Vec<u32>>,
    /// Displacement applied to every other atom in the second basin.
    pub basin_offset: [f64; 3],
    /// Frames spent in each basin before hopping.
    pub basin_period: usize,
    /// Amplitude of the slow radial breathing mode (relative scale).
    pub breathing_amplitude: f64,
    /// Breathing period in frames.
    pub breathing_period: usize,
    /// Gaussian jitter amplitude in A.
    pub noise_amplitude: f64,
    pub n_frames: usize,
    pub seed: u64,
}

impl Default for MdToyParams {
    fn default() -> Self {
        Self {
            n_atoms: 4,
            spring_constant: 2.0,
            equilibrium: None,
            species: None,
            basin_offset: [0.8, 0.0, 0.0],
            basin_period: 50,
            breathing_amplitude: 0.15,
            breathing_period: 37,
            noise_amplitude: 0.01,
            n_frames: 200,
            seed: 0,
        }
    }
}

impl MdToyParams {
    fn validate(&self) -> Result<(), SynthError> {
        if !(self.spring_constant > 0.0) {
            return Err(SynthError::InvalidParams(
                "spring constant must be > 0".into(),
            ));
        }
        if self.n_frames == 0 {
            return Err(SynthError::InvalidParams("n_frames must be >= 1".into()));
        }
        if self.n_atoms == 0 {
            return Err(SynthError::InvalidParams("n_atoms must be >= 1".into()));
        }
        if self.basin_period == 0 {
            return Err(SynthError::InvalidParams(
                "basin_period must be >= 1".into(),
            ));
        }
        if self.breathing_period == 0 {
            return Err(SynthError::InvalidParams(
                "breathing_period must be >= 1".into(),
            ));
        }
        if let Some(eq) = &self.equilibrium {
            if eq.len() != self.n_atoms {
                return Err(SynthError::InvalidParams(format!(
                    "equilibrium has {} rows for {} atoms",
                    eq.len(),
                    self.n_atoms
                )));
            }
        }
        if let Some(s) = &self.species {
            if s.len() != self.n_atoms {
                return Err(SynthError::InvalidParams(format!(
                    "species has {} entries for {} atoms",
                    s.len(),
                    self.n_atoms
                )));
            }
        }
        Ok(())
    }
}

/// Harmonic potential about `equilibrium`: E = k/2 * sum |x - x0|^2 and
/// its exact negative gradient F = -k (x - x0).
pub fn harmonic_energy_forces(
    positions: &[[f64; 3]],
    equilibrium: &[[f64; 3]],
    k: f64,
) -> (f64, Vec<[f64; 3]>) {
    let mut energy = 0.0;
    let mut forces = Vec::with_capacity(positions.len());
    for (x, x0) in positions.iter().zip(equilibrium) {
        let mut f = [0.0; 3];
        for c in 0..3 {
            let d = x[c] - x0[c];
            energy += 0.5 * k * d * d;
            f[c] = -k * d;
        }
        forces.push(f);
    }
    (energy, forces)
}

/// Generate a basin-hopping harmonic trajectory with exact energy/force
/// labels.
///
/// Positions follow a square wave between the equilibrium basin and a
/// second basin where every other atom is displaced by `basin_offset`
/// (so the internal geometry, and hence the structural descriptor,
/// actually changes). A slow radial breathing mode sweeps the geometry
/// along a smooth one-dimensional path, and seeded Gaussian jitter sits
/// on top. Labels always come from the single harmonic potential about
/// the equilibrium geometry, keeping F = -dE/dx exact.
pub fn gen_md_toy(params: &MdToyParams) -> Result<Trajectory, SynthError> {
    params.validate()?;
    let equilibrium: Vec<[f64; 3]> = params.equilibrium.clone().unwrap_or_else(|| {
        (0..params.n_atoms)
            .map(|i| [1.5 * i as f64, 0.0, 0.0])
            .collect()
    });
    let species: Vec<u32> = params
        .species
        .clone()
        .unwrap_or_else(|| (0..params.n_atoms).map(|i| [1u32, 6, 8][i % 3]).collect());
    let centroid = {
        let mut c = [0.0f64; 3];
        for x in &equilibrium {
            for k in 0..3 {
                c[k] += x[k];
            }
        }
        c.map(|v| v / equilibrium.len() as f64)
    };
    let mut rng = SplitMix64::new(params.seed);
    let mut frames = Vec::with_capacity(params.n_frames);
    for t in 0..params.n_frames {
        let in_second_basin = (t / params.basin_period) % 2 == 1;
        let breath = 1.0
            + params.breathing_amplitude
                * (std::f64::consts::TAU * t as f64 / params.breathing_period as f64).sin();
        let positions: Vec<[f64; 3]> = equilibrium
            .iter()
            .enumerate()
            .map(|(i, x0)| {
                let mut x = *x0;
                if in_second_basin && i % 2 == 1 {
                    for c in 0..3 {
                        x[c] += params.basin_offset[c];
                    }
                }
                for c in 0..3 {
                    x[c] = centroid[c] + breath * (x[c] - centroid[c]);
                    x[c] += params.noise_amplitude * rng.next_gaussian();
                }
                x
            })
            .collect();
        let (energy, forces) =
            harmonic_energy_forces(&positions, &equilibrium, params.spring_constant);
        frames.push(MolecularFrame {
            time_index: t as i64,
            species: species.clone(),
            positions,
            energy: Some(energy),
            forces: Some(forces),
        });
    }
    Ok(Trajectory::new("md_toy", frames)?)
}

// ---------------------------------------------------------------------------
// Jet toy dataset

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetToyClassParams {
    /// Total jet energy drawn uniformly from this range, GeV.
    pub energy_range: (f64, f64),
    /// Transverse angular scatter of constituents around the jet axis.
    pub angular_spread: f64,
    /// Constituent count drawn uniformly from this range (inclusive).
    pub particles_range: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetToyParams {
    pub n_events: usize,
    pub seed: u64,
    pub background: JetToyClassParams,
    pub signal: JetToyClassParams,
}

impl Default for JetToyParams {
    fn default() -> Self {
        Self {
            n_events: 1000,
            seed: 0,
            background: JetToyClassParams {
                energy_range: (550.0, 1500.0),
                angular_spread: 0.10,
                particles_range: (8, 24),
            },
            signal: JetToyClassParams {
                energy_range: (800.0, 2440.0),
                angular_spread: 0.25,
                particles_range: (12, 32),
            },
        }
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Generate balanced two-class jet events; event i carries label i % 2.
///
/// Each event gets its own derived stream, so inserting events never
/// reshuffles the others.
pub fn gen_jet_toy(params: &JetToyParams) -> Result<JetDataset, SynthError> {
    if params.n_events < 2 {
        return Err(SynthError::InvalidParams("n_events must be >= 2".into()));
    }
    for (name, class) in [
        ("background", &params.background),
        ("signal", &params.signal),
    ] {
        if !(class.energy_range.0 > 0.0 && class.energy_range.1 > class.energy_range.0) {
            return Err(SynthError::InvalidParams(format!(
                "{name}: bad energy range"
            )));
        }
        if class.particles_range.0 == 0 || class.particles_range.1 < class.particles_range.0 {
            return Err(SynthError::InvalidParams(format!(
                "{name}: bad particle range"
            )));
        }
    }
    let mut events = Vec::with_capacity(params.n_events);
    for i in 0..params.n_events {
        let label = (i % 2) as u8;
        let class = if label == 1 {
            &params.signal
        } else {
            &params.background
        };
        let mut rng = SplitMix64::new(derive_seed(params.seed, i as u64));
        let total_energy =
            class.energy_range.0 + rng.next_f64() * (class.energy_range.1 - class.energy_range.0);
        let span = class.particles_range.1 - class.particles_range.0;
        let n_particles = class.particles_range.0 + rng.next_below(span as u64 + 1) as usize;
        // Jet axis: uniform azimuth, mild polar tilt off the transverse plane.
        let phi = (rng.next_f64() - 0.5) * std::f64::consts::TAU;
        let alpha = (rng.next_f64() - 0.5) * 1.0;
        let axis = unit([
            phi.cos() * alpha.cos(),
            phi.sin() * alpha.cos(),
            alpha.sin(),
        ]);
        // Transverse frame for angular scatter.
        let t1 = unit([-axis[1], axis[0], 0.0]);
        let t2 = [
            axis[1] * t1[2] - axis[2] * t1[1],
            axis[2] * t1[0] - axis[0] * t1[2],
            axis[0] * t1[1] - axis[1] * t1[0],
        ];
        let shares: Vec<f64> = (0..n_particles).map(|_| 0.5 + rng.next_f64()).collect();
        let total_share: f64 = shares.iter().sum();
        let particles: Vec<[f64; 4]> = shares
            .iter()
            .map(|share| {
                let e = total_energy * share / total_share;
                let (g1, g2) = (rng.next_gaussian(), rng.next_gaussian());
                let dir = unit([
                    axis[0] + class.angular_spread * (g1 * t1[0] + g2 * t2[0]),
                    axis[1] + class.angular_spread * (g1 * t1[1] + g2 * t2[1]),
                    axis[2] + class.angular_spread * (g1 * t1[2] + g2 * t2[2]),
                ]);
                [e, e * dir[0], e * dir[1], e * dir[2]]
            })
            .collect();
        events.push(JetEvent::new(i as i64, particles, label)?);
    }
    Ok(JetDataset::new(events)?)
}

// ---------------------------------------------------------------------------
// Precipitation toy events

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecipBlob {
    /// Initial center (x = column, y = row).
    pub center: (f64, f64),
    /// Gaussian width in pixels.
    pub sigma: f64,
    /// Peak intensity, mm/h.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecipToyParams {
    pub event_id: i64,
    pub blobs: Vec<PrecipBlob>,
    /// Advection velocity (x, y) in pixels/frame.
    pub velocity: (f64, f64),
    /// Subtractive amplitude decay per frame, mm/h per frame.
    pub decay_rate: f64,
    pub h: usize,
    pub w: usize,
    pub input_len: usize,
    pub output_len: usize,
    /// Recorded for provenance; the event itself is a pure function of
    /// the other fields.
    pub seed: u64,
}

impl Default for PrecipToyParams {
    fn default() -> Self {
        Self {
            event_id: 0,
            blobs: vec![PrecipBlob {
                center: (12.0, 16.0),
                sigma: 1.5,
                amplitude: 24.0,
            }],
            velocity: (1.0, 0.0),
            decay_rate: 0.0,
            h: 32,
            w: 32,
            input_len: 2,
            output_len: 6,
            seed: 0,
        }
    }
}

/// Closed-form structure of a generated event, for analytic checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecipToyMeta {
    /// Combined center of mass per frame; None when fully decayed.
    pub com_path: Vec<Option<(f64, f64)>>,
    /// Total intensity per frame.
    pub mass_series: Vec<f64>,
}

/// Blobs must keep this many sigmas of margin from every frame edge so
/// truncation cannot disturb the analytic center of mass.
const BLOB_MARGIN_SIGMAS: f64 = 6.0;

/// Generate a precipitation event: Gaussian blobs advected by a constant
/// velocity with a linear amplitude decay, plus closed-form center-of-mass
/// and total-mass metadata.
pub fn gen_precip_toy(
    params: &PrecipToyParams,
) -> Result<(PrecipEvent, PrecipToyMeta), SynthError> {
    let t_total = params.input_len + params.output_len;
    if params.h < 8 || params.w < 8 {
        return Err(SynthError::InvalidParams(
            "dims must be at least 8x8".into(),
        ));
    }
    if params.blobs.is_empty() {
        return Err(SynthError::InvalidParams(
            "at least one blob required".into(),
        ));
    }
    if t_total == 0 {
        return Err(SynthError::InvalidParams(
            "event needs at least one frame".into(),
        ));
    }
    for blob in &params.blobs {
        if !(blob.sigma >= 1.0) {
            return Err(SynthError::InvalidParams(format!(
                "blob sigma {} must be >= 1 pixel",
                blob.sigma
            )));
        }
        if !(blob.amplitude >= 0.0) {
            return Err(SynthError::InvalidParams(
                "blob amplitude must be >= 0".into(),
            ));
        }
        let final_amp = blob.amplitude - params.decay_rate * (t_total as f64 - 1.0);
        if final_amp < 0.0 {
            return Err(SynthError::InvalidParams(format!(
                "decay rate {} drives amplitude {} negative by frame {}",
                params.decay_rate,
                blob.amplitude,
                t_total - 1
            )));
        }
    }
    // Bounds check over the whole path.
    for t in 0..t_total {
        for blob in &params.blobs {
            let cx = blob.center.0 + params.velocity.0 * t as f64;
            let cy = blob.center.1 + params.velocity.1 * t as f64;
            let margin = BLOB_MARGIN_SIGMAS * blob.sigma;
            if cx < margin
                || cx > params.w as f64 - 1.0 - margin
                || cy < margin
                || cy > params.h as f64 - 1.0 - margin
            {
                return Err(SynthError::OutOfBounds {
                    frame: t,
                    x: cx,
                    y: cy,
                    margin,
                });
            }
        }
    }
    // Per-blob kernel mass measured once at the initial position; integer
    // or fractional advection leaves it unchanged to well below 1e-9.
    let kernel_sums: Vec<f64> = params
        .blobs
        .iter()
        .map(|blob| {
            let mut s = 0.0;
            for i in 0..params.h {
                for j in 0..params.w {
                    let dx = j as f64 - blob.center.0;
                    let dy = i as f64 - blob.center.1;
                    s += (-(dx * dx + dy * dy) / (2.0 * blob.sigma * blob.sigma)).exp();
                }
            }
            s
        })
        .collect();
    let mut frames = Vec::with_capacity(t_total);
    let mut com_path = Vec::with_capacity(t_total);
    let mut mass_series = Vec::with_capacity(t_total);
    for t in 0..t_total {
        let mut grid = Grid::zeros(params.h, params.w);
        let mut mass = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for (blob, kernel_sum) in params.blobs.iter().zip(&kernel_sums) {
            let amp = blob.amplitude - params.decay_rate * t as f64;
            let cx = blob.center.0 + params.velocity.0 * t as f64;
            let cy = blob.center.1 + params.velocity.1 * t as f64;
            if amp > 0.0 {
                for i in 0..params.h {
                    for j in 0..params.w {
                        let dx = j as f64 - cx;
                        let dy = i as f64 - cy;
                        let v =
                            amp * (-(dx * dx + dy * dy) / (2.0 * blob.sigma * blob.sigma)).exp();
                        grid.set(i, j, grid.get(i, j) + v);
                    }
                }
            }
            let blob_mass = amp * kernel_sum;
            mass += blob_mass;
            mx += blob_mass * cx;
            my += blob_mass * cy;
        }
        mass_series.push(mass);
        com_path.push((mass > 0.0).then(|| (mx / mass, my / mass)));
        frames.push(grid);
    }
    let event = PrecipEvent::new(params.event_id, frames, params.input_len, params.output_len)?;
    Ok((
        event,
        PrecipToyMeta {
            com_path,
            mass_series,
        },
    ))
}

// ---------------------------------------------------------------------------
// Toy predictors

struct LabeledDescriptor {
    descriptor: Arc<StructuralDescriptor>,
    energy: f64,
    forces: Vec<[f64; 3]>,
}

/// Nearest-neighbor force model: copy the labels of the train frame with
/// the most similar structural descriptor.
pub struct KnnForcePredictor {
    /// Train entries in ascending id order, so similarity ties resolve
    /// to the earliest frame.
    train: Vec<LabeledDescriptor>,
    params: DescriptorParams,
}

impl KnnForcePredictor {
    pub fn fit(
        traj: &Trajectory,
        train_ids: &[i64],
        params: &DescriptorParams,
    ) -> Result<Self, SynthError> {
        let mut ids = train_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut train = Vec::with_capacity(ids.len());
        for id in ids {
            let frame = traj.frame_by_time(id).ok_or_else(|| {
                SynthError::InvalidParams(format!("train id {id} not in trajectory"))
            })?;
            let energy = frame.energy.ok_or_else(|| {
                SynthError::InvalidParams(format!("train frame {id} has no energy label"))
            })?;
            let forces = frame.forces.clone().ok_or_else(|| {
                SynthError::InvalidParams(format!("train frame {id} has no force labels"))
            })?;
            train.push(LabeledDescriptor {
                descriptor: Arc::new(structural_descriptor(frame, params)?),
                energy,
                forces,
            });
        }
        if train.is_empty() {
            return Err(SynthError::EmptyTrainSlice("knn_forces"));
        }
        Ok(Self {
            train,
            params: *params,
        })
    }

    /// Predict one frame; ties in similarity resolve to the lowest train id.
    pub fn predict_frame(
        &self,
        frame: &MolecularFrame,
    ) -> Result<(f64, Vec<[f64; 3]>), SynthError> {
        let desc = structural_descriptor(frame, &self.params)?;
        let mut best = &self.train[0];
        let mut best_sim = f64::NEG_INFINITY;
        for entry in &self.train {
            let sim = desc.cosine(&entry.descriptor);
            if sim > best_sim {
                best_sim = sim;
                best = entry;
            }
        }
        Ok((best.energy, best.forces.clone()))
    }

    pub fn predict(
        &self,
        traj: &Trajectory,
        test_ids: &[i64],
    ) -> Result<PredictionSet, SynthError> {
        let mut preds = PredictionSet::new("toy:knn_forces", "in_process", 0);
        let mut ids = test_ids.to_vec();
        ids.sort_unstable();
        for id in ids {
            let frame = traj.frame_by_time(id).ok_or_else(|| {
                SynthError::InvalidParams(format!("test id {id} not in trajectory"))
            })?;
            let (energy, forces) = self.predict_frame(frame)?;
            preds
                .entries
                .insert(id, Prediction::EnergyForces { energy, forces });
        }
        Ok(preds)
    }
}

/// A diagonal Fisher discriminant over projected jet features
/// (all rotation-invariant moments of E, dphi, deta).
pub struct LinearTagger {
    weights: Vec<f64>,
    bias: f64,
}

pub(crate) fn jet_feature_vector(event: &JetEvent) -> Result<Vec<f64>, SynthError> {
    let f = project_jet_features(event)?;
    let total_e: f64 = f.energies.iter().sum();
    let wmean = |vals: &[f64]| -> f64 {
        f.energies
            .iter()
            .zip(vals)
            .map(|(e, v)| e * v.abs())
            .sum::<f64>()
            / total_e
    };
    let wrms = |vals: &[f64]| -> f64 {
        (f.energies
            .iter()
            .zip(vals)
            .map(|(e, v)| e * v * v)
            .sum::<f64>()
            / total_e)
            .sqrt()
    };
    Ok(vec![
        total_e,
        f.energies.len() as f64,
        wmean(&f.dphi),
        wmean(&f.deta),
        wrms(&f.dphi),
        wrms(&f.deta),
    ])
}

impl LinearTagger {
    pub fn fit(ds: &JetDataset, train_ids: &[i64]) -> Result<Self, SynthError> {
        let mut ids = train_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut class_stats: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for id in ids {
            let ev = ds.get(id).ok_or_else(|| {
                SynthError::InvalidParams(format!("train id {id} not in dataset"))
            })?;
            class_stats[usize::from(ev.label == 1)].push(jet_feature_vector(ev)?);
        }
        if class_stats[0].is_empty() || class_stats[1].is_empty() {
            return Err(SynthError::EmptyTrainSlice("linear_tagger"));
        }
        let dim = class_stats[0][0].len();
        let mean_of = |rows: &Vec<Vec<f64>>| -> Vec<f64> {
            let mut m = vec![0.0; dim];
            for row in rows {
                for (k, v) in row.iter().enumerate() {
                    m[k] += v;
                }
            }
            m.iter().map(|v| v / rows.len() as f64).collect()
        };
        let m0 = mean_of(&class_stats[0]);
        let m1 = mean_of(&class_stats[1]);
        let mut var = vec![0.0; dim];
        let total = (class_stats[0].len() + class_stats[1].len()) as f64;
        for (rows, mean) in class_stats.iter().zip([&m0, &m1]) {
            for row in rows {
                for (k, v) in row.iter().enumerate() {
                    var[k] += (v - mean[k]).powi(2);
                }
            }
        }
        let weights: Vec<f64> = (0..dim)
            .map(|k| (m1[k] - m0[k]) / (var[k] / total + 1e-12))
            .collect();
        let bias = -weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * 0.5 * (m0[k] + m1[k]))
            .sum::<f64>();
        Ok(Self { weights, bias })
    }

    /// Signal score in (0, 1).
    pub fn score(&self, event: &JetEvent) -> Result<f64, SynthError> {
        let x = jet_feature_vector(event)?;
        let z: f64 = self.weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        Ok(1.0 / (1.0 + (-z).exp()))
    }

    pub fn predict(&self, ds: &JetDataset, test_ids: &[i64]) -> Result<PredictionSet, SynthError> {
        let mut preds = PredictionSet::new("toy:linear_tagger", "in_process", 0);
        let mut ids = test_ids.to_vec();
        ids.sort_unstable();
        for id in ids {
            let ev = ds
                .get(id)
                .ok_or_else(|| SynthError::InvalidParams(format!("test id {id} not in dataset")))?;
            let s = self.score(ev)?;
            preds.entries.insert(
                id,
                Prediction::ClassScores {
                    scores: vec![1.0 - s, s],
                },
            );
        }
        Ok(preds)
    }
}

/// Estimate a velocity from the last two input frames' centers of mass
/// and advect the final input frame forward with bilinear resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvectionExtrapolator {
    /// Gaussian pixel noise amplitude added per forecast frame.
    pub noise_amp: f64,
    /// Scale the noise by the event's mean input intensity, so noisier
    /// events are the more intense ones.
    pub relative_noise: bool,
}

impl Default for AdvectionExtrapolator {
    fn default() -> Self {
        Self {
            noise_amp: 0.0,
            relative_noise: false,
        }
    }
}

fn bilinear_sample(g: &Grid, y: f64, x: f64) -> f64 {
    let (h, w) = g.shape();
    if y <= -1.0 || x <= -1.0 || y >= h as f64 || x >= w as f64 {
        return 0.0;
    }
    let i0 = y.floor();
    let j0 = x.floor();
    let fy = y - i0;
    let fx = x - j0;
    let at = |i: f64, j: f64| -> f64 {
        if i < 0.0 || j < 0.0 || i >= h as f64 || j >= w as f64 {
            0.0
        } else {
            g.get(i as usize, j as usize)
        }
    };
    at(i0, j0) * (1.0 - fy) * (1.0 - fx)
        + at(i0, j0 + 1.0) * (1.0 - fy) * fx
        + at(i0 + 1.0, j0) * fy * (1.0 - fx)
        + at(i0 + 1.0, j0 + 1.0) * fy * fx
}

impl AdvectionExtrapolator {
    /// Forecast all leads of one event. `seed` drives the optional noise;
    /// with `noise_amp` 0 the output is deterministic and the seed is
    /// ignored.
    pub fn predict_event(&self, event: &PrecipEvent, seed: u64) -> Result<Vec<Grid>, SynthError> {
        let inputs = event.input_frames();
        let last = inputs.last().expect("events hold at least one frame");
        let velocity = if inputs.len() >= 2 {
            let prev = &inputs[inputs.len() - 2];
            match (center_of_mass(prev), center_of_mass(last)) {
                (Some((px, py)), Some((lx, ly))) => (lx - px, ly - py),
                _ => (0.0, 0.0),
            }
        } else {
            (0.0, 0.0)
        };
        let noise_scale = if self.relative_noise {
            let mean: f64 = inputs.iter().map(|g| g.sum()).sum::<f64>()
                / inputs.iter().map(|g| g.as_slice().len()).sum::<usize>() as f64;
            self.noise_amp * mean
        } else {
            self.noise_amp
        };
        let mut rng = SplitMix64::new(derive_seed(seed, event.event_id as u64));
        let (h, w) = last.shape();
        let mut out = Vec::with_capacity(event.output_len());
        for lead in 0..event.output_len() {
            let steps = (lead + 1) as f64;
            let mut g = Grid::zeros(h, w);
            for i in 0..h {
                for j in 0..w {
                    let mut v = bilinear_sample(
                        last,
                        i as f64 - velocity.1 * steps,
                        j as f64 - velocity.0 * steps,
                    );
                    if noise_scale > 0.0 {
                        v = (v + noise_scale * rng.next_gaussian()).max(0.0);
                    }
                    g.set(i, j, v);
                }
            }
            out.push(g);
        }
        Ok(out)
    }

    pub fn predict(&self, events: &[PrecipEvent], seed: u64) -> Result<PredictionSet, SynthError> {
        let mut preds = PredictionSet::new("toy:advection", "in_process", seed);
        let mut ordered: Vec<&PrecipEvent> = events.iter().collect();
        ordered.sort_by_key(|e| e.event_id);
        for ev in ordered {
            let frames = self.predict_event(ev, seed)?;
            preds
                .entries
                .insert(ev.event_id, Prediction::Frames { frames });
        }
        Ok(preds)
    }
}

/// Randomized desk-scale precipitation dataset: one advected blob per
/// event with per-event amplitude, width, velocity, and start point, all
/// placed so the blob keeps its full margin over the whole path.
pub fn gen_precip_toy_dataset(
    n_events: usize,
    h: usize,
    w: usize,
    input_len: usize,
    output_len: usize,
    seed: u64,
) -> Result<Vec<(PrecipEvent, PrecipToyMeta)>, SynthError> {
    let min_dim = h.min(w) as f64;
    let sigma_hi = ((min_dim - 3.0) / (2.0 * BLOB_MARGIN_SIGMAS)).min(2.0);
    if sigma_hi < 1.0 {
        return Err(SynthError::InvalidParams(format!(
            "dims {h}x{w} leave no room for an in-bounds blob (need at least 15x15)"
        )));
    }
    let t_total = (input_len + output_len) as f64;
    let steps = (t_total - 1.0).max(1.0);
    let mut out = Vec::with_capacity(n_events);
    for id in 0..n_events {
        let mut rng = SplitMix64::new(derive_seed(seed, id as u64));
        let sigma = 1.0 + rng.next_f64() * (sigma_hi - 1.0);
        let margin = BLOB_MARGIN_SIGMAS * sigma;
        // Half the free span is travel budget, half placement slack.
        let span_x = (w as f64 - 1.0) - 2.0 * margin;
        let span_y = (h as f64 - 1.0) - 2.0 * margin;
        let vmax_x = (span_x / (2.0 * steps)).min(1.5);
        let vmax_y = (span_y / (2.0 * steps)).min(1.5);
        let vx = (2.0 * rng.next_f64() - 1.0) * vmax_x;
        let vy = (2.0 * rng.next_f64() - 1.0) * vmax_y;
        let place = |lo_pad: f64, span: f64, drift: f64, u: f64| {
            let lo = margin + lo_pad + (-drift).max(0.0);
            let hi = margin + span - drift.max(0.0);
            lo + u * (hi - lo)
        };
        let cx = place(0.0, span_x, vx * steps, rng.next_f64());
        let cy = place(0.0, span_y, vy * steps, rng.next_f64());
        let amplitude = 8.0 + rng.next_f64() * 56.0;
        let params = PrecipToyParams {
            event_id: id as i64,
            blobs: vec![PrecipBlob {
                center: (cx, cy),
                sigma,
                amplitude,
            }],
            velocity: (vx, vy),
            decay_rate: 0.0,
            h,
            w,
            input_len,
            output_len,
            seed: derive_seed(seed, id as u64),
        };
        out.push(gen_precip_toy(&params)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
