//! Domain types for the three workload families.
//!
//! Sample ids are explicit integers carried in the files (a frame's
//! `time_index`, an event's `event_id`), never positional, so slices and
//! per-sample metric values stay joinable across runs and serializations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// One atomic configuration, optionally labeled with energy and forces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularFrame {
    /// Restored temporal order within the source trajectory.
    pub time_index: i64,
    /// Atomic numbers, one per atom.
    pub species: Vec<u32>,
    /// Angstrom coordinates, one row per atom.
    pub positions: Vec<[f64; 3]>,
    /// Potential energy in eV. Absent on unlabeled inference-only frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Forces in eV/Angstrom, one row per atom.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forces: Option<Vec<[f64; 3]>>,
}

impl MolecularFrame {
    pub fn n_atoms(&self) -> usize {
        self.species.len()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let n = self.species.len();
        if self.positions.len() != n {
            return Err(DataError::ShapeMismatch {
                time_index: self.time_index,
                field: "positions",
                got: self.positions.len(),
                expected: n,
            });
        }
        if self.positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                time_index: self.time_index,
                field: "positions",
            });
        }
        if let Some(e) = self.energy {
            if !e.is_finite() {
                return Err(DataError::NonFinite {
                    time_index: self.time_index,
                    field: "energy",
                });
            }
        }
        if let Some(forces) = &self.forces {
            if forces.len() != n {
                return Err(DataError::ShapeMismatch {
                    time_index: self.time_index,
                    field: "forces",
                    got: forces.len(),
                    expected: n,
                });
            }
            if forces.iter().flatten().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite {
                    time_index: self.time_index,
                    field: "forces",
                });
            }
        }
        Ok(())
    }
}

/// Time-ordered molecular frames sharing one species list.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub molecule_name: String,
    frames: Vec<MolecularFrame>,
}

impl Trajectory {
    /// Validates every frame, sorts by `time_index`, and checks that the
    /// species list is shared and time indices are unique.
    pub fn new(
        molecule_name: impl Into<String>,
        mut frames: Vec<MolecularFrame>,
    ) -> Result<Self, DataError> {
        if frames.is_empty() {
            return Err(DataError::EmptyTrajectory);
        }
        for f in &frames {
            f.validate()?;
        }
        frames.sort_by_key(|f| f.time_index);
        for w in frames.windows(2) {
            if w[0].time_index == w[1].time_index {
                return Err(DataError::DuplicateTimeIndex(w[0].time_index));
            }
        }
        let species = frames[0].species.clone();
        for f in &frames[1..] {
            if f.species != species {
                return Err(DataError::SpeciesMismatch {
                    time_index: f.time_index,
                });
            }
        }
        Ok(Self {
            molecule_name: molecule_name.into(),
            frames,
        })
    }

    /// Frames in strictly increasing `time_index` order.
    pub fn frames(&self) -> &[MolecularFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn species(&self) -> &[u32] {
        &self.frames[0].species
    }

    pub fn frame_by_time(&self, time_index: i64) -> Option<&MolecularFrame> {
        self.frames
            .binary_search_by_key(&time_index, |f| f.time_index)
            .ok()
            .map(|i| &self.frames[i])
    }

    /// All frame ids (time indices) in storage order.
    pub fn ids(&self) -> Vec<i64> {
        self.frames.iter().map(|f| f.time_index).collect()
    }
}

/// One jet: a point cloud of particle 4-momenta with a binary class label.
#[derive(Debug, Clone, PartialEq)]
pub struct JetEvent {
    pub event_id: i64,
    /// (E, p_x, p_y, p_z) per constituent, GeV.
    pub particles: Vec<[f64; 4]>,
    /// 0 = background, 1 = signal.
    pub label: u8,
    jet_energy: f64,
}

impl JetEvent {
    pub fn new(event_id: i64, particles: Vec<[f64; 4]>, label: u8) -> Result<Self, DataError> {
        if particles.is_empty() {
            return Err(DataError::EmptyParticles { event_id });
        }
        if particles.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteMomentum { event_id });
        }
        let jet_energy = particles.iter().map(|p| p[0]).sum();
        Ok(Self {
            event_id,
            particles,
            label,
            jet_energy,
        })
    }

    /// Like [`JetEvent::new`] but cross-checks a jet energy carried in the
    /// file against the constituent sum (1e-6 relative).
    pub fn with_stored_energy(
        event_id: i64,
        particles: Vec<[f64; 4]>,
        label: u8,
        stored: f64,
    ) -> Result<Self, DataError> {
        let ev = Self::new(event_id, particles, label)?;
        let denom = ev.jet_energy.abs().max(1.0);
        if (stored - ev.jet_energy).abs() / denom > 1e-6 {
            return Err(DataError::JetEnergyMismatch {
                event_id,
                stored,
                computed: ev.jet_energy,
            });
        }
        Ok(ev)
    }

    /// Total jet energy: the sum of constituent energies.
    pub fn jet_energy(&self) -> f64 {
        self.jet_energy
    }
}

/// Jet events keyed by `event_id`, stored in increasing id order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JetDataset {
    events: Vec<JetEvent>,
}

impl JetDataset {
    pub fn new(mut events: Vec<JetEvent>) -> Result<Self, DataError> {
        events.sort_by_key(|e| e.event_id);
        for w in events.windows(2) {
            if w[0].event_id == w[1].event_id {
                return Err(DataError::DuplicateEventId(w[0].event_id));
            }
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[JetEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, event_id: i64) -> Option<&JetEvent> {
        self.events
            .binary_search_by_key(&event_id, |e| e.event_id)
            .ok()
            .map(|i| &self.events[i])
    }

    pub fn ids(&self) -> Vec<i64> {
        self.events.iter().map(|e| e.event_id).collect()
    }
}

/// A dense H x W intensity grid, row-major.
///
/// Values are held as f64 for metric math; the on-disk format quantizes
/// to little-endian f32 (see [`crate::io`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            data: vec![0.0; h * w],
        }
    }

    pub fn from_vec(h: usize, w: usize, data: Vec<f64>) -> Result<Self, DataError> {
        if h == 0 || w == 0 || data.len() != h * w {
            return Err(DataError::EmptyGrid);
        }
        Ok(Self { h, w, data })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.w + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.w + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Row-major pixel iterator yielding (row, col, value).
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.w;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k / w, k % w, v))
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = self.data.chunks(self.w).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(deserializer)?;
        let h = rows.len();
        let w = rows.first().map(|r| r.len()).unwrap_or(0);
        if h == 0 || w == 0 || rows.iter().any(|r| r.len() != w) {
            return Err(serde::de::Error::custom(
                "grid rows must be non-empty and rectangular",
            ));
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Grid { h, w, data })
    }
}

/// A precipitation event: T = p + f fixed-interval intensity frames,
/// the first p being model input and the last f the forecast targets.
/// The standard radar nowcasting setup uses p = 9 input frames and
/// f = 20 forecasts on 512x512 grids; nothing here depends on that.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecipEvent {
    pub event_id: i64,
    frames: Vec<Grid>,
    input_len: usize,
    output_len: usize,
}

impl PrecipEvent {
    pub fn new(
        event_id: i64,
        frames: Vec<Grid>,
        input_len: usize,
        output_len: usize,
    ) -> Result<Self, DataError> {
        if frames.len() != input_len + output_len {
            return Err(DataError::FrameCountMismatch {
                event_id,
                got: frames.len(),
                p: input_len,
                f: output_len,
            });
        }
        let (eh, ew) = frames[0].shape();
        for (t, g) in frames.iter().enumerate() {
            let (gh, gw) = g.shape();
            if (gh, gw) != (eh, ew) {
                return Err(DataError::GridDimsMismatch {
                    event_id,
                    frame: t,
                    gh,
                    gw,
                    eh,
                    ew,
                });
            }
            for &v in g.as_slice() {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteIntensity { event_id, frame: t });
                }
                if v < 0.0 {
                    return Err(DataError::NegativeIntensity {
                        event_id,
                        frame: t,
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            event_id,
            frames,
            input_len,
            output_len,
        })
    }

    pub fn frames(&self) -> &[Grid] {
        &self.frames
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// (T, H, W).
    pub fn dims(&self) -> (usize, usize, usize) {
        let (h, w) = self.frames[0].shape();
        (self.frames.len(), h, w)
    }

    pub fn input_frames(&self) -> &[Grid] {
        &self.frames[..self.input_len]
    }

    pub fn output_frames(&self) -> &[Grid] {
        &self.frames[self.input_len..]
    }

    /// Ground-truth frame for forecast lead `lead` (0-based).
    pub fn output_frame(&self, lead: usize) -> &Grid {
        &self.frames[self.input_len + lead]
    }
}

/// A model's predicted output for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prediction {
    EnergyForces {
        energy: f64,
        forces: Vec<[f64; 3]>,
    },
    ClassScores {
        /// Per-class scores in [0,1] summing to 1; index 1 is the signal class.
        scores: Vec<f64>,
    },
    Frames {
        /// The f forecast frames.
        frames: Vec<Grid>,
    },
}

impl Prediction {
    /// Signal-class score of a classification prediction.
    pub fn signal_score(&self) -> Option<f64> {
        match self {
            Prediction::ClassScores { scores } => scores.get(1).copied(),
            _ => None,
        }
    }
}

/// All predictions of one model run, keyed by sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub model_id: String,
    pub run_id: String,
    pub seed: u64,
    pub entries: BTreeMap<i64, Prediction>,
}

impl PredictionSet {
    pub fn new(model_id: impl Into<String>, run_id: impl Into<String>, seed: u64) -> Self {
        Self {
            model_id: model_id.into(),
            run_id: run_id.into(),
            seed,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, id: i64) -> Result<&Prediction, DataError> {
        self.entries
            .get(&id)
            .ok_or(DataError::MissingPrediction(id))
    }

    /// Validate a classification entry: scores in [0,1], summing to 1 within 1e-9.
    pub fn validate_scores(&self) -> Result<(), DataError> {
        for p in self.entries.values() {
            if let Prediction::ClassScores { scores } = p {
                let sum: f64 = scores.iter().sum();
                if scores.iter().any(|&s| !(0.0..=1.0).contains(&s)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(DataError::BadClassScores(scores.clone()));
                }
            }
        }
        Ok(())
    }

    /// Check that frame predictions match an event's expected output shape.
    pub fn validate_frames_for(&self, event: &PrecipEvent) -> Result<&[Grid], DataError> {
        let id = event.event_id;
        match self.get(id)? {
            Prediction::Frames { frames } => {
                let (_, h, w) = event.dims();
                if frames.len() != event.output_len() {
                    return Err(DataError::PredictionShape {
                        id,
                        detail: format!(
                            "expected {} output frames, got {}",
                            event.output_len(),
                            frames.len()
                        ),
                    });
                }
                for (k, g) in frames.iter().enumerate() {
                    if g.shape() != (h, w) {
                        return Err(DataError::PredictionShape {
                            id,
                            detail: format!("frame {k} is {:?}, expected ({h}, {w})", g.shape()),
                        });
                    }
                }
                Ok(frames)
            }
            _ => Err(DataError::PredictionShape {
                id,
                detail: "expected frame prediction".into(),
            }),
        }
    }

    /// Check that an energy/forces prediction matches a frame's atom count.
    pub fn validate_energy_forces_for(
        &self,
        frame: &MolecularFrame,
    ) -> Result<(f64, &[[f64; 3]]), DataError> {
        let id = frame.time_index;
        match self.get(id)? {
            Prediction::EnergyForces { energy, forces } => {
                if forces.len() != frame.n_atoms() {
                    return Err(DataError::PredictionShape {
                        id,
                        detail: format!(
                            "expected {} force rows, got {}",
                            frame.n_atoms(),
                            forces.len()
                        ),
                    });
                }
                Ok((*energy, forces))
            }
            _ => Err(DataError::PredictionShape {
                id,
                detail: "expected energy/forces prediction".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: i64, species: Vec<u32>, pos: Vec<[f64; 3]>) -> MolecularFrame {
        MolecularFrame {
            time_index: t,
            species,
            positions: pos,
            energy: None,
            forces: None,
        }
    }

    #[test]
    fn trajectory_sorts_by_time_index() {
        let f = |t| frame(t, vec![1, 1], vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        let traj = Trajectory::new("h2", vec![f(5), f(1), f(3)]).unwrap();
        assert_eq!(traj.ids(), vec![1, 3, 5]);
    }

    #[test]
    fn trajectory_rejects_duplicate_time_index() {
        let f = |t| frame(t, vec![1], vec![[0.0; 3]]);
        let err = Trajectory::new("x", vec![f(2), f(2)]).unwrap_err();
        assert!(matches!(err, DataError::DuplicateTimeIndex(2)));
    }

    #[test]
    fn trajectory_rejects_species_mismatch() {
        let a = frame(0, vec![1, 8], vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        let b = frame(1, vec![1, 6], vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        let err = Trajectory::new("x", vec![a, b]).unwrap_err();
        assert!(matches!(err, DataError::SpeciesMismatch { time_index: 1 }));
    }

    #[test]
    fn frame_rejects_force_shape_mismatch() {
        let mut f = frame(2, vec![1, 1, 1, 1], vec![[0.0; 3]; 3]);
        f.forces = None;
        let err = f.validate().unwrap_err();
        match err {
            DataError::ShapeMismatch {
                time_index,
                got,
                expected,
                ..
            } => {
                assert_eq!((time_index, got, expected), (2, 3, 4));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn jet_energy_is_constituent_sum() {
        let ev = JetEvent::new(1, vec![[10.0, 3.0, 4.0, 0.0], [5.0, 0.0, 0.0, 5.0]], 0).unwrap();
        assert_eq!(ev.jet_energy(), 15.0);
    }

    #[test]
    fn jet_event_rejects_empty_and_nonfinite() {
        assert!(matches!(
            JetEvent::new(7, vec![], 0).unwrap_err(),
            DataError::EmptyParticles { event_id: 7 }
        ));
        assert!(matches!(
            JetEvent::new(8, vec![[f64::NAN, 0.0, 0.0, 0.0]], 0).unwrap_err(),
            DataError::NonFiniteMomentum { event_id: 8 }
        ));
    }

    #[test]
    fn stored_jet_energy_checked() {
        let p = vec![[10.0, 3.0, 4.0, 0.0]];
        assert!(JetEvent::with_stored_energy(1, p.clone(), 0, 10.0).is_ok());
        assert!(JetEvent::with_stored_energy(1, p, 0, 10.1).is_err());
    }

    #[test]
    fn precip_event_checks_shape_and_sign() {
        let g = Grid::zeros(4, 4);
        assert!(PrecipEvent::new(1, vec![g.clone(); 3], 1, 2).is_ok());
        assert!(matches!(
            PrecipEvent::new(1, vec![g.clone(); 3], 1, 1).unwrap_err(),
            DataError::FrameCountMismatch { .. }
        ));
        let mut bad = Grid::zeros(4, 4);
        bad.set(0, 0, -1.0);
        assert!(matches!(
            PrecipEvent::new(1, vec![g, bad], 1, 1).unwrap_err(),
            DataError::NegativeIntensity { frame: 1, .. }
        ));
    }

    #[test]
    fn grid_round_trips_through_json() {
        let g = Grid::from_vec(2, 3, vec![0.0, 1.5, 2.0, 3.25, 4.0, 5.0]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, "[[0.0,1.5,2.0],[3.25,4.0,5.0]]");
        let back: Grid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
