//! `saibench toy-serve`: expose the in-process toy predictors over the
//! external stdio protocol, so the external path can be exercised (and
//! checked for byte-identical results) without a real model.

use std::io::{BufRead, Write};

use clap::{Args, Subcommand};
use saibench_core::data::{Grid, JetEvent, MolecularFrame, PrecipEvent, Prediction};
use saibench_core::harness::{PredictInput, WireMessage};
use saibench_core::io;
use saibench_core::sampling::time_window_slice;
use saibench_core::synth::{AdvectionExtrapolator, KnnForcePredictor, LinearTagger};
use saibench_core::transforms::DescriptorParams;

#[derive(Args)]
pub struct ToyServeArgs {
    #[command(subcommand)]
    predictor: ServePredictor,
}

#[derive(Subcommand)]
enum ServePredictor {
    /// Descriptor-nearest-neighbor force model.
    Knn {
        /// Trajectory to train on.
        #[arg(long)]
        dataset: String,
        /// Training window as start:size fractions (e.g. 0.0:0.9).
        #[arg(long, default_value = "0.0:0.9")]
        train_window: String,
        /// Subsample this many frames from the window.
        #[arg(long)]
        train_count: Option<usize>,
        /// Seed for the training subsample.
        #[arg(long, default_value_t = 0)]
        train_seed: u64,
    },
    /// Linear discriminant tagger on projected jet features.
    Tagger {
        #[arg(long)]
        dataset: String,
        /// Training window over id-sorted events, start:size fractions.
        #[arg(long, default_value = "0.0:0.8")]
        train_window: String,
    },
    /// Center-of-mass advection extrapolator.
    Advect {
        /// Forecast frame count to produce per event.
        #[arg(long)]
        output_len: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        relative: bool,
        /// Base noise seed (per-event streams derive from it).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("bad window {s:?}, expected start:size"))?;
    let start = a.parse().map_err(|_| format!("bad window start {a:?}"))?;
    let size = b.parse().map_err(|_| format!("bad window size {b:?}"))?;
    Ok((start, size))
}

/// Fractional rank window over id-sorted samples; matches the sweep
/// runner's slicing rule.
fn rank_window(ids: &[i64], start: f64, size: f64) -> Vec<i64> {
    let m = ids.len();
    let lo = ((start * m as f64) + 1e-9).floor() as usize;
    let hi = (((start + size) * m as f64) + 1e-9).floor() as usize;
    ids[lo.min(m)..hi.min(m)].to_vec()
}

enum Served {
    Knn(KnnForcePredictor),
    Tagger(LinearTagger),
    Advect {
        model: AdvectionExtrapolator,
        output_len: usize,
        seed: u64,
    },
}

impl Served {
    fn predict(&self, id: i64, input: PredictInput) -> Result<Prediction, String> {
        match (self, input) {
            (Served::Knn(knn), PredictInput::Molecular { species, positions }) => {
                let frame = MolecularFrame {
                    time_index: id,
                    species,
                    positions,
                    energy: None,
                    forces: None,
                };
                let (energy, forces) = knn.predict_frame(&frame).map_err(|e| e.to_string())?;
                Ok(Prediction::EnergyForces { energy, forces })
            }
            (Served::Tagger(tagger), PredictInput::Jet { particles }) => {
                let event = JetEvent::new(id, particles, 0).map_err(|e| e.to_string())?;
                let s = tagger.score(&event).map_err(|e| e.to_string())?;
                Ok(Prediction::ClassScores {
                    scores: vec![1.0 - s, s],
                })
            }
            (
                Served::Advect {
                    model,
                    output_len,
                    seed,
                },
                PredictInput::Precip { frames },
            ) => {
                let (h, w) = frames.first().map(|g| g.shape()).ok_or("no input frames")?;
                let p = frames.len();
                let mut padded = frames;
                padded.extend((0..*output_len).map(|_| Grid::zeros(h, w)));
                let event =
                    PrecipEvent::new(id, padded, p, *output_len).map_err(|e| e.to_string())?;
                let out = model
                    .predict_event(&event, *seed)
                    .map_err(|e| e.to_string())?;
                Ok(Prediction::Frames { frames: out })
            }
            _ => Err("input does not match the served workload".into()),
        }
    }
}

fn build(predictor: ServePredictor) -> Result<Served, String> {
    match predictor {
        ServePredictor::Knn {
            dataset,
            train_window,
            train_count,
            train_seed,
        } => {
            let traj = io::load_trajectory(&dataset).map_err(|e| e.to_string())?;
            let (start, size) = parse_window(&train_window)?;
            let window = time_window_slice(&traj, start, size).map_err(|e| e.to_string())?;
            let train_ids = match train_count {
                Some(count) => {
                    saibench_core::sampling::random_subsample(
                        &window.sample_ids,
                        saibench_core::sampling::SubsetSize::Count(count),
                        train_seed,
                    )
                    .map_err(|e| e.to_string())?
                    .sample_ids
                }
                None => window.sample_ids,
            };
            let knn = KnnForcePredictor::fit(&traj, &train_ids, &DescriptorParams::default())
                .map_err(|e| e.to_string())?;
            Ok(Served::Knn(knn))
        }
        ServePredictor::Tagger {
            dataset,
            train_window,
        } => {
            let ds = io::load_jet_dataset(&dataset).map_err(|e| e.to_string())?;
            let (start, size) = parse_window(&train_window)?;
            let train_ids = rank_window(&ds.ids(), start, size);
            let tagger = LinearTagger::fit(&ds, &train_ids).map_err(|e| e.to_string())?;
            Ok(Served::Tagger(tagger))
        }
        ServePredictor::Advect {
            output_len,
            noise,
            relative,
            seed,
        } => Ok(Served::Advect {
            model: AdvectionExtrapolator {
                noise_amp: noise,
                relative_noise: relative,
            },
            output_len,
            seed,
        }),
    }
}

pub fn run(args: ToyServeArgs) -> i32 {
    let served = match build(args.predictor) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut send = |msg: &WireMessage| -> bool {
        let mut line = serde_json::to_string(msg).expect("wire message serializes");
        line.push('\n');
        out.write_all(line.as_bytes())
            .and_then(|_| out.flush())
            .is_ok()
    };
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let msg: WireMessage = match serde_json::from_str(&line) {
            Ok(m) => m,
            Err(e) => {
                send(&WireMessage::Error {
                    id: None,
                    message: format!("malformed request: {e}"),
                });
                continue;
            }
        };
        match msg {
            WireMessage::Hello { .. } => {
                if !send(&WireMessage::Ack {
                    model_id: Some("saibench-toy".into()),
                }) {
                    break;
                }
            }
            WireMessage::Predict { id, input } => {
                let reply = match served.predict(id, input) {
                    Ok(output) => WireMessage::Result { id, output },
                    Err(message) => WireMessage::Error {
                        id: Some(id),
                        message,
                    },
                };
                if !send(&reply) {
                    break;
                }
            }
            WireMessage::Shutdown => break,
            other => {
                send(&WireMessage::Error {
                    id: None,
                    message: format!("unexpected message {other:?}"),
                });
            }
        }
    }
    0
}
