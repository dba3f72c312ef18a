//! The whole pipeline on the small smoke configuration.
//!
//! Run with: cargo run --release --example pipeline_smoke -- [out_dir]
//!
//! Writes every product plus `manifest.toml` and prints the trajectory
//! comparison against the QMF.

use std::path::{Path, PathBuf};

use strongfield::io::RunConfig;
use strongfield::pipeline::run_pipeline;

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/smoke"));
    let cfg = RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/smoke.toml")).expect("config");
    let rep = match run_pipeline(&cfg, &out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    println!("{} products in {}, config {}", rep.manifest.products.len(), out.display(), &rep.manifest.config_digest[..12]);
    if let Some(p) = &rep.propagation {
        println!("exit z = {:?}, onset = {:?}", p.exit_z, p.onset);
    }
    if let Some(ps) = &rep.phase_space {
        for c in &ps.checks {
            println!("t = {:7.3}  QMF(Wigner) vs QMF(current) rms {:.2e}", c.time, c.rms);
        }
    }
    if let Some(tr) = &rep.trajectories {
        for run in &tr.runs {
            println!("{:<30} mean Δp = {:.4}  status {}", run.flags.label(), run.mean_delta_p(), run.status);
        }
    }
}
