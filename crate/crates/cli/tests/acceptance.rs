//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Tolerances and runtime budgets are pinned in the assertions.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::collections::BTreeMap;
use std::fs;
use std::panic::AssertUnwindSafe;
use std::process::Command;
use std::time::{Duration, Instant};

use saibench_core::data::{Grid, PrecipEvent, Prediction, PredictionSet};
use saibench_core::harness::{
    run_plan, DatasetRef, MetricSpec, PlanWorkload, PredictorSpec, SweepAxis, SweepPlan,
    ToyPredictorSpec,
};
use saibench_core::io;
use saibench_core::metrics::{
    classification_metrics, com_displacement, csi, cucsi, differential_trend,
    displacement_mae_curve, force_mae, frames_by_ids, roc_auc, stability_analysis, StabilityMetric,
};
use saibench_core::report::read_report;
use saibench_core::rng::SplitMix64;
use saibench_core::sampling::threshold_responsive_subset;
use saibench_core::synth::{
    gen_md_toy, gen_precip_toy, gen_precip_toy_dataset, harmonic_energy_forces,
    AdvectionExtrapolator, MdToyParams, PrecipBlob, PrecipToyParams,
};

fn criterion(n: u32, desc: &str, body: impl FnOnce()) {
    match std::panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {n:02} PASS: {desc}"),
        Err(cause) => {
            println!("criterion {n:02} FAIL: {desc}");
            std::panic::resume_unwind(cause);
        }
    }
}

fn random_grid(rng: &mut SplitMix64, h: usize, w: usize, scale: f64) -> Grid {
    Grid::from_vec(h, w, (0..h * w).map(|_| rng.next_f64() * scale).collect()).unwrap()
}

#[test]
fn criterion_01_csi_oracle_equivalence() {
    criterion(
        1,
        "CSI equals the pixel-count oracle on 1000 random 8x8 pairs",
        || {
            let started = Instant::now();
            let mut rng = SplitMix64::new(101);
            for _ in 0..1000 {
                let gt = random_grid(&mut rng, 8, 8, 80.0);
                let pd = random_grid(&mut rng, 8, 8, 80.0);
                for t in [16.0, 32.0, 64.0] {
                    let (mut a, mut b, mut c) = (0u64, 0u64, 0u64);
                    for (i, j, g) in gt.pixels() {
                        let p = pd.get(i, j);
                        match (g >= t, p >= t) {
                            (true, true) => a += 1,
                            (true, false) => b += 1,
                            (false, true) => c += 1,
                            (false, false) => {}
                        }
                    }
                    let expected = (a + b + c > 0).then(|| a as f64 / (a + b + c) as f64);
                    assert_eq!(csi(&gt, &pd, t).unwrap(), expected, "threshold {t}");
                }
            }
            assert!(
                started.elapsed() < Duration::from_secs(5),
                "took {:?}",
                started.elapsed()
            );
        },
    );
}

#[test]
fn criterion_02_cucsi_consistency() {
    criterion(
        2,
        "CuCSI rows sum to the responsive count and match brute force",
        || {
            let started = Instant::now();
            let pairs = gen_precip_toy_dataset(50, 24, 24, 2, 5, 202).unwrap();
            let events: Vec<PrecipEvent> = pairs.into_iter().map(|(e, _)| e).collect();
            let model = AdvectionExtrapolator {
                noise_amp: 2.0,
                relative_noise: false,
            };
            let preds = model.predict(&events, 77).unwrap();
            let (t, n, s) = (16.0, 30, 0.015);
            let grid = cucsi(&events, &preds, t, n, s).unwrap();
            // Brute force: per-event, per-frame double loop.
            let mut oracle = vec![vec![0u64; n]; 5];
            let mut considered = 0u64;
            for ev in &events {
                let frames = preds.validate_frames_for(ev).unwrap();
                let responsive = (0..5).all(|lead| {
                    let gt = ev.output_frame(lead);
                    let pd = &frames[lead];
                    gt.as_slice().iter().any(|&v| v >= t) || pd.as_slice().iter().any(|&v| v >= t)
                });
                if !responsive {
                    continue;
                }
                considered += 1;
                for lead in 0..5 {
                    let score = csi(ev.output_frame(lead), &frames[lead], t)
                        .unwrap()
                        .unwrap();
                    let bin = ((score / s).floor() as usize).min(n - 1);
                    oracle[lead][bin] += 1;
                }
            }
            assert!(
                considered > 0 && considered < 50,
                "fixture should filter some events"
            );
            assert_eq!(grid.considered, considered);
            assert_eq!(grid.counts, oracle);
            for row in &grid.counts {
                assert_eq!(row.iter().sum::<u64>(), considered);
            }
            assert!(
                started.elapsed() < Duration::from_secs(10),
                "took {:?}",
                started.elapsed()
            );
        },
    );
}

#[test]
fn criterion_03_com_geometry() {
    criterion(
        3,
        "COM displacement: (3,4) translation gives 5.0; self gives 0",
        || {
            let mut rng = SplitMix64::new(303);
            let mut gt = Grid::zeros(32, 32);
            for i in 8..14 {
                for j in 6..13 {
                    gt.set(i, j, rng.next_f64() * 10.0 + 0.1);
                }
            }
            let mut pd = Grid::zeros(32, 32);
            for (i, j, v) in gt.pixels() {
                if v > 0.0 {
                    pd.set(i + 4, j + 3, v);
                }
            }
            let d = com_displacement(&gt, &pd).unwrap();
            assert!((d.delta_r - 5.0).abs() < 1e-9, "delta_r {}", d.delta_r);
            let same = com_displacement(&gt, &gt).unwrap();
            assert_eq!(same.delta_r, 0.0);
        },
    );
}

#[test]
fn criterion_04_displacement_mae_misalignment_insensitivity() {
    criterion(
        4,
        "displacement MAE: non-decreasing to separation, constant beyond",
        || {
            // Compact 6x6 constant blob in a 40x40 frame; extent 6, so the
            // curve must be exactly constant from d=6 and in particular past
            // 2x the extent.
            let mut frame = Grid::zeros(40, 40);
            for i in 12..18 {
                for j in 12..18 {
                    frame.set(i, j, 3.0);
                }
            }
            let displacements: Vec<(i64, i64)> = (0..=20).map(|d| (d, 0)).collect();
            let curve = displacement_mae_curve(&frame, &displacements);
            for pair in curve.windows(2) {
                if pair[1].0 <= 6.0 {
                    assert!(
                        pair[1].1 >= pair[0].1 - 1e-15,
                        "not non-decreasing: {pair:?}"
                    );
                }
            }
            let saturated = 2.0 * frame.sum() / (40.0 * 40.0);
            for &(norm, mae) in curve.iter().filter(|&&(norm, _)| norm >= 12.0) {
                assert!(
                    (mae - saturated).abs() < 1e-12,
                    "d={norm}: {mae} vs {saturated}"
                );
            }
        },
    );
}

#[test]
fn criterion_05_rotation_invariance_sweep() {
    criterion(
        5,
        "AUC constant within 1e-9 across the 36-angle 5-degree sweep",
        || {
            let dir = tempfile::tempdir().unwrap();
            let status = Command::new(env!("CARGO_BIN_EXE_saibench"))
                .current_dir(dir.path())
                .args(["gen", "jet", "--seed", "7", "--events", "400", "--out", "d"])
                .status()
                .unwrap();
            assert!(status.success());
            let plan = SweepPlan {
                schema_version: 1,
                plan_id: "rotation".into(),
                seed: 3,
                workload: PlanWorkload::Jet,
                datasets: BTreeMap::from([(
                    "main".to_string(),
                    DatasetRef {
                        path: dir.path().join("d/jets.jsonl").display().to_string(),
                    },
                )]),
                axis: SweepAxis::RotationAngles {
                    step_deg: 5.0,
                    count: 36,
                },
                train_slice: None,
                test_slice: None,
                transforms: vec![],
                predictor: PredictorSpec::Toy(ToyPredictorSpec::LinearTagger),
                metrics: vec![MetricSpec {
                    name: "roc_auc".into(),
                    params: BTreeMap::new(),
                }],
                output_dir: None,
            };
            let result = run_plan(&plan, dir.path().join("out"), 4).unwrap();
            assert_eq!(result.cells.len(), 36);
            assert_eq!(result.failed_cells(), 0);
            let auc_of = |cell: &saibench_core::harness::CellOutcome| {
                read_report(result.out_dir.join(&cell.reports["roc_auc"]))
                    .unwrap()
                    .param_f64("auc")
                    .unwrap()
            };
            let base = auc_of(&result.cells[0]);
            assert!(base > 0.55, "tagger should beat chance, got {base}");
            for cell in &result.cells {
                let auc = auc_of(cell);
                assert!(
                    (auc - base).abs() < 1e-9,
                    "angle {:?}: auc {auc} vs base {base}",
                    cell.coords
                );
            }
        },
    );
}

#[test]
fn criterion_06_auc_rank_equivalence() {
    criterion(
        6,
        "trapezoid AUC equals the pairwise rank statistic (100 sets)",
        || {
            let mut rng = SplitMix64::new(606);
            for round in 0..100 {
                let mut samples: Vec<(f64, u8)> = (0..30)
                    .map(|_| {
                        let quantized = (rng.next_f64() * 10.0).floor() / 10.0;
                        (quantized, (rng.next_u64() & 1) as u8)
                    })
                    .collect();
                samples[0].1 = 0;
                samples[1].1 = 1;
                let roc = roc_auc(&samples).unwrap();
                let pos: Vec<f64> = samples.iter().filter(|s| s.1 == 1).map(|s| s.0).collect();
                let neg: Vec<f64> = samples.iter().filter(|s| s.1 == 0).map(|s| s.0).collect();
                let mut rank = 0.0;
                for &p in &pos {
                    for &n in &neg {
                        rank += if p > n {
                            1.0
                        } else if p == n {
                            0.5
                        } else {
                            0.0
                        };
                    }
                }
                rank /= (pos.len() * neg.len()) as f64;
                assert!(
                    (roc.auc - rank).abs() < 1e-9,
                    "round {round}: {} vs {rank}",
                    roc.auc
                );
            }
        },
    );
}

#[test]
fn criterion_07_decompositions() {
    criterion(
        7,
        "force MAE and accuracy decompose exactly over groups",
        || {
            // Forces: random frames and noisy predictions over three species.
            let mut rng = SplitMix64::new(707);
            let traj = gen_md_toy(&MdToyParams {
                n_atoms: 6,
                n_frames: 20,
                seed: 7,
                ..Default::default()
            })
            .unwrap();
            let mut preds = PredictionSet::new("noisy", "r0", 0);
            for frame in traj.frames() {
                let forces = frame
                    .forces
                    .clone()
                    .unwrap()
                    .iter()
                    .map(|row| {
                        [
                            row[0] + rng.next_gaussian(),
                            row[1] + rng.next_gaussian(),
                            row[2] + rng.next_gaussian(),
                        ]
                    })
                    .collect();
                preds.entries.insert(
                    frame.time_index,
                    Prediction::EnergyForces {
                        energy: frame.energy.unwrap(),
                        forces,
                    },
                );
            }
            let frames = frames_by_ids(&traj, &traj.ids()).unwrap();
            let report = force_mae(&frames, &preds, true).unwrap();
            let overall = report.param_f64("overall_mae").unwrap();
            let maes = report.params["per_species_mae"].as_object().unwrap();
            let counts = report.params["per_species_atom_count"].as_object().unwrap();
            let mut weighted = 0.0;
            let mut total = 0.0;
            for (z, mae) in maes {
                let c = counts[z].as_f64().unwrap();
                weighted += mae.as_f64().unwrap() * c;
                total += c;
            }
            assert!((overall - weighted / total).abs() < 1e-12);
            // Accuracy: random scores and labels.
            let samples: Vec<(i64, f64, u8)> = (0..500)
                .map(|i| (i, rng.next_f64(), (rng.next_u64() % 2) as u8))
                .collect();
            let report = classification_metrics(&samples).unwrap();
            let acc = report.aggregates.as_ref().unwrap().mean;
            let ratio = report.param_f64("signal_ratio").unwrap();
            let sig = report.param_f64("signal_accuracy").unwrap();
            let bg = report.param_f64("background_accuracy").unwrap();
            assert!((acc - (ratio * sig + (1.0 - ratio) * bg)).abs() < 1e-12);
        },
    );
}

#[test]
fn criterion_08_window_grid_enumeration_and_idempotency() {
    criterion(
        8,
        "the 30-90%/0-60% grid yields 15 windows, run twice changes nothing",
        || {
            let dir = tempfile::tempdir().unwrap();
            let traj = gen_md_toy(&MdToyParams {
                n_frames: 200,
                seed: 88,
                ..Default::default()
            })
            .unwrap();
            let traj_path = dir.path().join("traj.jsonl");
            io::write_trajectory(&traj, &traj_path).unwrap();
            let plan = SweepPlan {
                schema_version: 1,
                plan_id: "grid".into(),
                seed: 8,
                workload: PlanWorkload::Md,
                datasets: BTreeMap::from([(
                    "main".to_string(),
                    DatasetRef {
                        path: traj_path.display().to_string(),
                    },
                )]),
                axis: SweepAxis::WindowGrid {
                    sizes: vec![0.30, 0.45, 0.60, 0.75, 0.90],
                    starts: vec![0.0, 0.15, 0.30, 0.45, 0.60],
                    max_end: 0.90,
                    sample_count: Some(30),
                },
                train_slice: None,
                test_slice: None,
                transforms: vec![],
                predictor: PredictorSpec::Toy(ToyPredictorSpec::KnnForces { descriptor: None }),
                metrics: vec![MetricSpec {
                    name: "force_mae".into(),
                    params: BTreeMap::new(),
                }],
                output_dir: None,
            };
            let out = dir.path().join("out");
            let first = run_plan(&plan, &out, 2).unwrap();
            assert_eq!(first.cells.len(), 15, "window grid must enumerate 15 cells");
            assert_eq!(first.failed_cells(), 0);
            let mut files: Vec<_> = fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            assert_eq!(files.len(), 16, "15 reports plus the manifest");
            let snapshot: Vec<(String, Vec<u8>)> = files
                .iter()
                .map(|p| (p.display().to_string(), fs::read(p).unwrap()))
                .collect();
            let second = run_plan(&plan, &out, 2).unwrap();
            assert!(second.cells.iter().all(|c| c.cached));
            for (path, bytes) in snapshot {
                assert_eq!(fs::read(&path).unwrap(), bytes, "{path} changed on rerun");
            }
        },
    );
}

#[test]
fn criterion_09_threshold_responsive_filtering() {
    criterion(
        9,
        "all-zero events excluded; subset monotone non-increasing in T",
        || {
            let mut events = Vec::new();
            let mut preds = PredictionSet::new("mixed", "r0", 0);
            // Event 0 is all-zero; the rest carry increasing peaks.
            for id in 0..12 {
                let mut frames = Vec::new();
                for _ in 0..4 {
                    let mut g = Grid::zeros(8, 8);
                    if id > 0 {
                        g.set(4, 4, 4.0 * id as f64);
                    }
                    frames.push(g);
                }
                events.push(PrecipEvent::new(id, frames, 1, 3).unwrap());
                preds.entries.insert(
                    id,
                    Prediction::Frames {
                        frames: vec![Grid::zeros(8, 8); 3],
                    },
                );
            }
            for t in [0.5, 2.0, 10.0, 30.0] {
                let subset = threshold_responsive_subset(&events, &preds, t).unwrap();
                assert!(
                    !subset.sample_ids.contains(&0),
                    "all-zero event kept at T={t}"
                );
            }
            let mut last = usize::MAX;
            for t in [1.0, 5.0, 9.0, 17.0, 33.0, 45.0] {
                let n = threshold_responsive_subset(&events, &preds, t)
                    .unwrap()
                    .len();
                assert!(n <= last, "subset grew from {last} to {n} at T={t}");
                last = n;
            }
        },
    );
}

#[test]
fn criterion_10_generator_self_consistency() {
    criterion(10, "toy generators match their analytic structure", || {
        // Forces against central differences of the energy.
        let params = MdToyParams {
            n_frames: 10,
            seed: 10,
            ..Default::default()
        };
        let traj = gen_md_toy(&params).unwrap();
        let equilibrium: Vec<[f64; 3]> = (0..params.n_atoms)
            .map(|i| [1.5 * i as f64, 0.0, 0.0])
            .collect();
        let h = 1e-5;
        for frame in traj.frames() {
            let forces = frame.forces.as_ref().unwrap();
            for a in 0..params.n_atoms {
                for c in 0..3 {
                    let mut plus = frame.positions.clone();
                    let mut minus = frame.positions.clone();
                    plus[a][c] += h;
                    minus[a][c] -= h;
                    let (ep, _) =
                        harmonic_energy_forces(&plus, &equilibrium, params.spring_constant);
                    let (em, _) =
                        harmonic_energy_forces(&minus, &equilibrium, params.spring_constant);
                    assert!(((ep - em) / (2.0 * h) + forces[a][c]).abs() < 1e-5);
                }
            }
        }
        // COM path against the metric COM.
        let (event, meta) = gen_precip_toy(&PrecipToyParams {
            velocity: (0.75, -0.5),
            input_len: 2,
            output_len: 6,
            ..Default::default()
        })
        .unwrap();
        for (t, g) in event.frames().iter().enumerate() {
            let (mx, my) = meta.com_path[t].unwrap();
            let got = saibench_core::metrics::center_of_mass(g).unwrap();
            assert!(
                (got.0 - mx).abs() < 1e-6 && (got.1 - my).abs() < 1e-6,
                "frame {t}"
            );
        }
        // Differential trend against the analytic mass schedule.
        let (event, meta) = gen_precip_toy(&PrecipToyParams {
            blobs: vec![PrecipBlob {
                center: (16.0, 14.0),
                sigma: 1.4,
                amplitude: 30.0,
            }],
            velocity: (0.25, 0.25),
            decay_rate: 2.5,
            input_len: 1,
            output_len: 7,
            ..Default::default()
        })
        .unwrap();
        let perfect = event.output_frames().to_vec();
        let area = (32 * 32) as f64;
        for j in 1..7 {
            let (dg, dp) = differential_trend(&event, &perfect, 0, j).unwrap();
            assert_eq!(dg, dp);
            let expected = (meta.mass_series[1 + j] - meta.mass_series[1]) / area;
            assert!(
                (dg - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                "lead {j}: {dg} vs {expected}"
            );
        }
    });
}

#[test]
fn criterion_11_external_protocol_equivalence() {
    criterion(
        11,
        "external stdio toy and in-process toy write identical reports",
        || {
            let dir = tempfile::tempdir().unwrap();
            let traj = gen_md_toy(&MdToyParams {
                n_frames: 150,
                seed: 11,
                ..Default::default()
            })
            .unwrap();
            let traj_path = dir.path().join("traj.jsonl");
            io::write_trajectory(&traj, &traj_path).unwrap();
            let base_plan = |predictor: PredictorSpec| SweepPlan {
                schema_version: 1,
                plan_id: "equiv".into(),
                seed: 21,
                workload: PlanWorkload::Md,
                datasets: BTreeMap::from([(
                    "main".to_string(),
                    DatasetRef {
                        path: traj_path.display().to_string(),
                    },
                )]),
                axis: SweepAxis::SubsetSizes { sizes: vec![40] },
                train_slice: None,
                test_slice: None,
                transforms: vec![],
                predictor,
                metrics: vec![
                    MetricSpec {
                        name: "force_mae".into(),
                        params: BTreeMap::new(),
                    },
                    MetricSpec {
                        name: "energy_error".into(),
                        params: BTreeMap::new(),
                    },
                ],
                output_dir: None,
            };
            let in_proc = base_plan(PredictorSpec::Toy(ToyPredictorSpec::KnnForces {
                descriptor: None,
            }));
            let external = base_plan(PredictorSpec::External {
                command: vec![
                    env!("CARGO_BIN_EXE_saibench").to_string(),
                    "toy-serve".into(),
                    "knn".into(),
                    "--dataset".into(),
                    traj_path.display().to_string(),
                    "--train-window".into(),
                    "0.0:0.9".into(),
                    "--train-count".into(),
                    "40".into(),
                    "--train-seed".into(),
                    "{cell_seed}".into(),
                ],
                timeout_secs: 30,
            });
            let a = run_plan(&in_proc, dir.path().join("a"), 1).unwrap();
            let b = run_plan(&external, dir.path().join("b"), 1).unwrap();
            assert_eq!(a.failed_cells(), 0);
            assert_eq!(b.failed_cells(), 0);
            for metric in ["force_mae", "energy_error"] {
                let left = fs::read(a.out_dir.join(&a.cells[0].reports[metric])).unwrap();
                let right = fs::read(b.out_dir.join(&b.cells[0].reports[metric])).unwrap();
                assert_eq!(left, right, "{metric} reports differ between paths");
            }
        },
    );
}

#[test]
fn criterion_12_stability_harness() {
    criterion(
        12,
        "10 events x 100 runs: 16-bin histograms sum to 100, within 60 s",
        || {
            let started = Instant::now();
            let pairs = gen_precip_toy_dataset(10, 32, 32, 2, 6, 1212).unwrap();
            let events: Vec<PrecipEvent> = pairs.into_iter().map(|(e, _)| e).collect();
            let noisy = AdvectionExtrapolator {
                noise_amp: 0.4,
                relative_noise: false,
            };
            let result = stability_analysis(
                |ev, seed| noisy.predict_event(ev, seed).map_err(|e| e.to_string()),
                &events,
                100,
                StabilityMetric::Mae,
                &[0, 2, 5],
                12,
            )
            .unwrap();
            assert_eq!(result.events.len(), 10);
            for ev in &result.events {
                for lead in &ev.per_lead {
                    assert_eq!(lead.histogram.n_bins(), 16);
                    assert_eq!(lead.histogram.total(), 100);
                    assert_eq!(lead.samples.len(), 100);
                }
            }
            // A deterministic predictor spreads nothing and flags nothing.
            let clean = AdvectionExtrapolator::default();
            let det = stability_analysis(
                |ev, seed| clean.predict_event(ev, seed).map_err(|e| e.to_string()),
                &events,
                100,
                StabilityMetric::Mae,
                &[0, 5],
                12,
            )
            .unwrap();
            for ev in &det.events {
                for lead in &ev.per_lead {
                    assert!(
                        lead.outlier_runs.is_empty(),
                        "deterministic run flagged outliers"
                    );
                    assert!(lead.samples.windows(2).all(|w| w[0] == w[1]));
                }
            }
            assert!(
                started.elapsed() < Duration::from_secs(60),
                "took {:?}",
                started.elapsed()
            );
        },
    );
}

#[test]
fn criterion_13_end_to_end_smoke() {
    criterion(
        13,
        "gen -> sweep(5 sizes) -> trace(r > 0.9) -> render under 2 minutes",
        || {
            let started = Instant::now();
            let dir = tempfile::tempdir().unwrap();
            let run = |args: &[&str]| {
                let out = Command::new(env!("CARGO_BIN_EXE_saibench"))
                    .current_dir(dir.path())
                    .args(args)
                    .output()
                    .unwrap();
                assert!(
                    out.status.success(),
                    "saibench {:?} failed: {}",
                    args,
                    String::from_utf8_lossy(&out.stderr)
                );
                String::from_utf8_lossy(&out.stdout).into_owned()
            };
            // Generate both workload datasets.
            run(&[
                "gen", "md", "--seed", "13", "--frames", "1200", "--out", "data",
            ]);
            run(&[
                "gen", "precip", "--seed", "13", "--events", "40", "--out", "data",
            ]);
            // Sample-efficiency sweep over five sizes.
            let plan = r#"{
            "schema_version": 1,
            "plan_id": "smoke-se",
            "seed": 13,
            "workload": "md",
            "datasets": {"main": {"path": "data/md_toy.jsonl"}},
            "axis": "subset_sizes",
            "sizes": [200, 400, 600, 800, 1000],
            "predictor": {"type": "toy", "kind": "knn_forces"},
            "metrics": [{"name": "force_mae"}]
        }"#;
            fs::write(dir.path().join("plan.json"), plan).unwrap();
            run(&["sweep", "--plan", "plan.json", "--out", "sweep_out"]);
            for i in 0..5 {
                assert!(dir
                    .path()
                    .join(format!("sweep_out/cell_00{i}_force_mae.json"))
                    .exists());
            }
            // Proportional-noise predictions: MAE tracks mean intensity.
            run(&[
                "eval",
                "--workload",
                "precip",
                "--dataset",
                "data/precip/manifest.json",
                "--predictor",
                "advect:noise=0.15:relative",
                "--metrics",
                "mae,mean_intensity",
                "--seed",
                "13",
                "--out",
                "eval_out",
            ]);
            run(&[
                "trace",
                "--reports",
                "eval_out/mean_intensity.json",
                "eval_out/mae.json",
                "--out",
                "trace_out",
            ]);
            let correlations: serde_json::Value = serde_json::from_str(
                &fs::read_to_string(dir.path().join("trace_out/correlations.json")).unwrap(),
            )
            .unwrap();
            let r = correlations[0]["pearson_r"].as_f64().unwrap();
            assert!(r > 0.9, "MAE vs intensity correlation too weak: r = {r}");
            assert!(dir
                .path()
                .join("trace_out/scatter_mean_intensity_mae.svg")
                .exists());
            // Render a sweep report and the trace scatter.
            run(&[
                "render",
                "--input",
                "sweep_out/cell_004_force_mae.json",
                "--kind",
                "line",
                "--out",
                "render_out",
            ]);
            assert!(dir
                .path()
                .join("render_out/cell_004_force_mae_line.svg")
                .exists());
            assert!(dir
                .path()
                .join("render_out/cell_004_force_mae_line.csv")
                .exists());
            assert!(
                started.elapsed() < Duration::from_secs(120),
                "pipeline took {:?}",
                started.elapsed()
            );
        },
    );
}

/// The sweep manifest records the hash of the plan that produced it.
#[test]
fn sweep_manifest_records_plan_hash() {
    let dir = tempfile::tempdir().unwrap();
    let traj = gen_md_toy(&MdToyParams {
        n_frames: 60,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let traj_path = dir.path().join("traj.jsonl");
    io::write_trajectory(&traj, &traj_path).unwrap();
    let plan = SweepPlan {
        schema_version: 1,
        plan_id: "hash-check".into(),
        seed: 2,
        workload: PlanWorkload::Md,
        datasets: BTreeMap::from([(
            "main".to_string(),
            DatasetRef {
                path: traj_path.display().to_string(),
            },
        )]),
        axis: SweepAxis::SubsetSizes { sizes: vec![10] },
        train_slice: None,
        test_slice: None,
        transforms: vec![],
        predictor: PredictorSpec::Toy(ToyPredictorSpec::KnnForces { descriptor: None }),
        metrics: vec![MetricSpec {
            name: "force_mae".into(),
            params: BTreeMap::new(),
        }],
        output_dir: None,
    };
    let result = run_plan(&plan, dir.path().join("out"), 1).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(result.out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(
        manifest["plan_hash"].as_str().unwrap(),
        plan.hash().unwrap()
    );
    assert_eq!(manifest["plan_id"], "hash-check");
}
