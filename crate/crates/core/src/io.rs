//! Dataset, prediction, and report file formats.
//!
//! - Trajectory / jet files: UTF-8 line-delimited JSON, one record per line.
//! - Precipitation frames: one binary file per event (magic `SAIB`,
//!   u32 version, u32 T/H/W, then T*H*W little-endian f32), plus a JSON
//!   manifest listing the events.
//! - Predictions and reports: canonical JSON.
//!
//! Writers are deterministic: the same in-memory value always produces the
//! same bytes, and write -> read -> write reproduces a file exactly.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{
    Grid, JetDataset, JetEvent, MolecularFrame, PrecipEvent, PredictionSet, Trajectory,
};
use crate::error::{DataError, LoadError};
use crate::report::{canonical_json, write_atomic};

const PRECIP_MAGIC: &[u8; 4] = b"SAIB";
const PRECIP_VERSION: u32 = 1;

fn io_err(path: &Path, source: std::io::Error) -> LoadError {
    LoadError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn invalid(path: &Path, source: DataError) -> LoadError {
    LoadError::Invalid {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    molecule: Option<String>,
    time_index: i64,
    species: Vec<u32>,
    positions: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forces: Option<Vec<[f64; 3]>>,
}

/// Load a trajectory from line-delimited JSON. Frames may appear in any
/// order on disk; the result is sorted by `time_index`.
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, LoadError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut frames = Vec::new();
    let mut molecule: Option<String> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajRecord =
            serde_json::from_str(&line).map_err(|e| LoadError::MalformedRecord {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: e.to_string(),
            })?;
        if let Some(m) = rec.molecule {
            match &molecule {
                None => molecule = Some(m),
                Some(prev) if *prev != m => {
                    return Err(LoadError::MalformedRecord {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        detail: format!("molecule {m:?} differs from {prev:?}"),
                    });
                }
                _ => {}
            }
        }
        frames.push(MolecularFrame {
            time_index: rec.time_index,
            species: rec.species,
            positions: rec.positions,
            energy: rec.energy,
            forces: rec.forces,
        });
    }
    let name = molecule.unwrap_or_else(|| {
        path.file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("trajectory")
            .to_string()
    });
    Trajectory::new(name, frames).map_err(|e| invalid(path, e))
}

/// Write a trajectory as line-delimited JSON, frames in time order.
pub fn write_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), LoadError> {
    let path = path.as_ref();
    let mut out = String::new();
    for f in traj.frames() {
        let rec = TrajRecord {
            molecule: Some(traj.molecule_name.clone()),
            time_index: f.time_index,
            species: f.species.clone(),
            positions: f.positions.clone(),
            energy: f.energy,
            forces: f.forces.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("trajectory record serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes()).map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct JetRecord {
    event_id: i64,
    label: u8,
    particles: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jet_energy: Option<f64>,
}

/// Load jet events from line-delimited JSON, keyed by `event_id`.
///
/// `jet_energy` is recomputed from the constituents; a stored value is
/// cross-checked (1e-6 relative) rather than trusted.
pub fn load_jet_dataset(path: impl AsRef<Path>) -> Result<JetDataset, LoadError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut events = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JetRecord =
            serde_json::from_str(&line).map_err(|e| LoadError::MalformedRecord {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: e.to_string(),
            })?;
        let event = match rec.jet_energy {
            Some(stored) => {
                JetEvent::with_stored_energy(rec.event_id, rec.particles, rec.label, stored)
            }
            None => JetEvent::new(rec.event_id, rec.particles, rec.label),
        }
        .map_err(|e| invalid(path, e))?;
        events.push(event);
    }
    JetDataset::new(events).map_err(|e| invalid(path, e))
}

/// Write jet events as line-delimited JSON in event-id order.
pub fn write_jet_dataset(ds: &JetDataset, path: impl AsRef<Path>) -> Result<(), LoadError> {
    let path = path.as_ref();
    let mut out = String::new();
    for e in ds.events() {
        let rec = JetRecord {
            event_id: e.event_id,
            label: e.label,
            particles: e.particles.clone(),
            jet_energy: None,
        };
        out.push_str(&serde_json::to_string(&rec).expect("jet record serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes()).map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct PrecipManifest {
    schema_version: u32,
    events: Vec<PrecipManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrecipManifestEntry {
    event_id: i64,
    p: usize,
    f: usize,
    file: String,
    dims: [usize; 3],
}

/// Read one event's frames from the SAIB binary format.
fn read_precip_frames(path: &Path) -> Result<(usize, usize, usize, Vec<f32>), LoadError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() < 20 || &bytes[0..4] != PRECIP_MAGIC {
        return Err(LoadError::BadMagic {
            path: path.display().to_string(),
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != PRECIP_VERSION {
        return Err(LoadError::BadVersion {
            path: path.display().to_string(),
            version,
        });
    }
    let (t, h, w) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let expected = t * h * w;
    let payload = &bytes[20..];
    if payload.len() != expected * 4 {
        return Err(LoadError::SizeMismatch {
            path: path.display().to_string(),
            got: payload.len() / 4,
            expected,
        });
    }
    let mut values = Vec::with_capacity(expected);
    for chunk in payload.chunks_exact(4) {
        values.push(f32::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok((t, h, w, values))
}

fn write_precip_frames(
    path: &Path,
    t: usize,
    h: usize,
    w: usize,
    values: &[f32],
) -> Result<(), LoadError> {
    let mut bytes = Vec::with_capacity(20 + values.len() * 4);
    bytes.extend_from_slice(PRECIP_MAGIC);
    bytes.extend_from_slice(&PRECIP_VERSION.to_le_bytes());
    for dim in [t, h, w] {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &bytes).map_err(|e| io_err(path, e))
}

/// Load precipitation events from a manifest plus per-event binary files.
///
/// Frame-file paths are resolved relative to the manifest's directory.
pub fn load_precip_dataset(manifest_path: impl AsRef<Path>) -> Result<Vec<PrecipEvent>, LoadError> {
    let manifest_path = manifest_path.as_ref();
    let raw = fs::read_to_string(manifest_path).map_err(|e| io_err(manifest_path, e))?;
    let manifest: PrecipManifest =
        serde_json::from_str(&raw).map_err(|e| LoadError::BadManifest {
            path: manifest_path.display().to_string(),
            detail: e.to_string(),
        })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut events = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for entry in &manifest.events {
        if !seen.insert(entry.event_id) {
            return Err(invalid(
                manifest_path,
                DataError::DuplicateEventId(entry.event_id),
            ));
        }
        let file = base.join(&entry.file);
        let (t, h, w, values) = read_precip_frames(&file)?;
        let manifest_dims = (entry.dims[0], entry.dims[1], entry.dims[2]);
        if manifest_dims != (t, h, w) {
            return Err(LoadError::DimsDisagree {
                path: file.display().to_string(),
                manifest: manifest_dims,
                header: (t, h, w),
            });
        }
        let mut frames = Vec::with_capacity(t);
        for ft in 0..t {
            let slice = &values[ft * h * w..(ft + 1) * h * w];
            let data: Vec<f64> = slice.iter().map(|&v| v as f64).collect();
            frames.push(Grid::from_vec(h, w, data).map_err(|e| invalid(&file, e))?);
        }
        let event = PrecipEvent::new(entry.event_id, frames, entry.p, entry.f)
            .map_err(|e| invalid(&file, e))?;
        events.push(event);
    }
    events.sort_by_key(|e| e.event_id);
    Ok(events)
}

/// Write precipitation events: one `event_<id>.saib` per event under
/// `dir`, plus a canonical-JSON manifest at `dir/<manifest_name>`.
///
/// In-memory f64 intensities are quantized to f32 here; reading the files
/// back therefore reproduces the written bytes exactly.
pub fn write_precip_dataset(
    events: &[PrecipEvent],
    dir: impl AsRef<Path>,
    manifest_name: &str,
) -> Result<std::path::PathBuf, LoadError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut ordered: Vec<&PrecipEvent> = events.iter().collect();
    ordered.sort_by_key(|e| e.event_id);
    let mut entries = Vec::new();
    for ev in ordered {
        let (t, h, w) = ev.dims();
        let file = format!("event_{}.saib", ev.event_id);
        let values: Vec<f32> = ev
            .frames()
            .iter()
            .flat_map(|g| g.as_slice().iter().map(|&v| v as f32))
            .collect();
        write_precip_frames(&dir.join(&file), t, h, w, &values)?;
        entries.push(PrecipManifestEntry {
            event_id: ev.event_id,
            p: ev.input_len(),
            f: ev.output_len(),
            file,
            dims: [t, h, w],
        });
    }
    let manifest = PrecipManifest {
        schema_version: 1,
        events: entries,
    };
    let manifest_path = dir.join(manifest_name);
    let body = canonical_json(&manifest).map_err(|e| LoadError::BadManifest {
        path: manifest_path.display().to_string(),
        detail: e.to_string(),
    })?;
    write_atomic(&manifest_path, body.as_bytes()).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest_path)
}

/// Read a prediction set from canonical JSON.
pub fn load_prediction_set(path: impl AsRef<Path>) -> Result<PredictionSet, LoadError> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let preds: PredictionSet = serde_json::from_str(&raw).map_err(|e| LoadError::BadManifest {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    preds.validate_scores().map_err(|e| invalid(path, e))?;
    Ok(preds)
}

/// Write a prediction set as canonical JSON.
pub fn write_prediction_set(
    preds: &PredictionSet,
    path: impl AsRef<Path>,
) -> Result<(), LoadError> {
    let path = path.as_ref();
    let body = canonical_json(preds).map_err(|e| LoadError::BadManifest {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    write_atomic(path, body.as_bytes()).map_err(|e| io_err(path, e))
}
