//! Imaginary-time ground states of hydrogen-like potentials.
//!
//! Run with: cargo run --release --example ground_state -- [dz]
//!
//! Relaxes the bare Coulomb ground state on a `(z, ρ)` grid of spacing `dz`
//! (default 0.1 a.u., box ±20 a.u.) and a soft-core state for comparison.
//! The exact hydrogen energy is −0.5 Hartree.

use std::time::Instant;

use strongfield::atomic::{relax, RelaxConfig};
use strongfield::{CylGrid, Potential};

fn main() -> strongfield::Result<()> {
    let dz: f64 = std::env::args().nth(1).map(|s| s.parse().expect("dz")).unwrap_or(0.1);
    let half_box = 20.0;
    let n_z = (2.0 * half_box / dz).round() as usize + 1;
    let n_rho = (half_box / dz).round() as usize;
    let grid = CylGrid::new(-half_box, half_box, n_z, half_box, n_rho)?;
    let cfg = RelaxConfig::default();

    for (label, pot) in [
        ("coulomb Z=1", Potential::coulomb(1.0)),
        ("soft-core Z=1 a=1", Potential::soft_core(1.0, 1.0)),
    ] {
        let start = Instant::now();
        let gs = relax(&pot, &grid, &cfg)?;
        println!(
            "{label:<20} dz = {dz:<5} E0 = {:.8}  iterations = {:>6}  <z> = {:+.2e}  ({:.1?})",
            gs.energy,
            gs.iterations,
            gs.wf.expectation_z(),
            start.elapsed()
        );
    }
    Ok(())
}
