//! `saibench gen`: seeded toy datasets written in the native formats.

use clap::{Args, Subcommand};
use saibench_core::io;
use saibench_core::synth::{
    gen_jet_toy, gen_md_toy, gen_precip_toy_dataset, JetToyClassParams, JetToyParams, MdToyParams,
};

use crate::config::CliConfig;

#[derive(Args)]
pub struct GenArgs {
    #[command(subcommand)]
    workload: GenWorkload,
}

#[derive(Subcommand)]
enum GenWorkload {
    /// Basin-hopping harmonic trajectory with exact energy/force labels.
    Md {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        frames: usize,
        #[arg(long, default_value_t = 4)]
        atoms: usize,
        /// Frames per basin before hopping.
        #[arg(long, default_value_t = 50)]
        basin_period: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
    },
    /// Balanced two-class jet events.
    Jet {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        events: usize,
        /// Give both classes identical distributions (null data).
        #[arg(long)]
        identical_classes: bool,
    },
    /// Advected-blob precipitation events plus manifest.
    Precip {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        events: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value_t = 2)]
        input_len: usize,
        #[arg(long, default_value_t = 6)]
        output_len: usize,
    },
}

pub fn run(args: GenArgs, cfg: &CliConfig) -> i32 {
    let out = &cfg.out_dir;
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: creating {}: {e}", out.display());
        return 1;
    }
    let result = match args.workload {
        GenWorkload::Md {
            seed,
            frames,
            atoms,
            basin_period,
            noise,
        } => {
            let params = MdToyParams {
                n_atoms: atoms,
                n_frames: frames,
                basin_period,
                noise_amplitude: noise,
                seed,
                ..Default::default()
            };
            gen_md_toy(&params)
                .map_err(|e| e.to_string())
                .and_then(|traj| {
                    let path = out.join("md_toy.jsonl");
                    io::write_trajectory(&traj, &path)
                        .map(|()| path.display().to_string())
                        .map_err(|e| e.to_string())
                })
        }
        GenWorkload::Jet {
            seed,
            events,
            identical_classes,
        } => {
            let mut params = JetToyParams {
                n_events: events,
                seed,
                ..Default::default()
            };
            if identical_classes {
                let class = JetToyClassParams {
                    energy_range: (600.0, 1800.0),
                    angular_spread: 0.15,
                    particles_range: (8, 20),
                };
                params.background = class.clone();
                params.signal = class;
            }
            gen_jet_toy(&params)
                .map_err(|e| e.to_string())
                .and_then(|ds| {
                    let path = out.join("jets.jsonl");
                    io::write_jet_dataset(&ds, &path)
                        .map(|()| path.display().to_string())
                        .map_err(|e| e.to_string())
                })
        }
        GenWorkload::Precip {
            seed,
            events,
            height,
            width,
            input_len,
            output_len,
        } => gen_precip_toy_dataset(events, height, width, input_len, output_len, seed)
            .map_err(|e| e.to_string())
            .and_then(|pairs| {
                let events: Vec<_> = pairs.into_iter().map(|(e, _)| e).collect();
                io::write_precip_dataset(&events, out.join("precip"), "manifest.json")
                    .map(|p| p.display().to_string())
                    .map_err(|e| e.to_string())
            }),
    };
    match result {
        Ok(path) => {
            println!("{path}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
