//! Exit time and exit momentum from detector momenta.
//!
//! Run with: cargo run --release --example reconstruct
//!
//! Launches electrons at several exit times inside the peak half-cycle with
//! the magnetic term on, then recovers `t_i`, `p_z⁰` and `p_ρ⁰` from the
//! final momenta alone.

use strongfield::classical::{IntegrateOptions, TrajectorySpec, Flags, Model};
use strongfield::reconstruction::{linspace, validate_roundtrip, ExitPrior};
use strongfield::{LaserPulse, Potential};

fn main() -> strongfield::Result<()> {
    let pulse = LaserPulse::new(0.095, 0.057)?;
    let pot = Potential::coulomb(1.0);
    let window = pulse.peak_half_cycle();
    let t_peak = pulse.t_peak();
    let p_z0 = 0.05;
    let prior = ExitPrior::constant(p_z0);
    let flags = Flags { coulomb_force: false, magnetic_term: true, model: Model::QmfSeeded };
    println!("window [{:.3}, {:.3}], prior p_z⁰ = {p_z0}", window.0, window.1);
    println!("{:>9} {:>8} {:>10} {:>10} {:>10} {:>10}", "t_i", "p_ρ⁰", "t_i err", "p_z⁰ err", "p_ρ⁰ err", "roots");
    for t_i in linspace(t_peak - 20.0, t_peak, 5) {
        for p_rho0 in [0.01, 0.04] {
            let spec = TrajectorySpec { t_i, exit_z: 0.0, p_z0, p_rho0, flags };
            let rec = validate_roundtrip(&spec, &pulse, &pot, &prior, window, &IntegrateOptions::default())?;
            let e = rec.errors.expect("round trip errors");
            println!(
                "{t_i:9.3} {p_rho0:8.3} {:10.2e} {:10.2e} {:10.2e} {:>10}",
                e.t_i.value, e.p_z0.value, e.p_rho0.value, rec.n_roots
            );
        }
    }
    Ok(())
}
