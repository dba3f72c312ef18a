//! Classical electrons released at the tunnel exit.
//!
//! Run with: cargo run --release --example trajectories -- [t_i]
//!
//! Integrates the Newton–Lorentz equation from the exit point at `t_i` for
//! simple-man and seeded starts, with and without the magnetic term and the
//! Coulomb force. With only the magnetic term the final momenta are the
//! initial ones rotated by β(t_i), which is checked against the closed form.
//! Near the peak the field suppresses the hydrogen barrier and there is no
//! exit point.

use strongfield::classical::{exit_point, integrate_with, Flags, IntegrateOptions, Model, TrajectorySpec};
use strongfield::reconstruction::{rotate_back, DetectorMomentum};
use strongfield::{LaserPulse, Potential};

fn main() -> strongfield::Result<()> {
    let t_i: f64 = std::env::args().nth(1).map(|s| s.parse().expect("t_i")).unwrap_or(145.0);
    let pulse = LaserPulse::new(0.095, 0.057)?;
    let pot = Potential::coulomb(1.0);
    let exit_z = exit_point(&pot, &pulse, t_i, 0.5)?;
    let c = pulse.consts.c_light;
    println!("t_i = {t_i}  E(t_i) = {:+.4}  exit z = {exit_z:+.4}  β = {:+.4e}", pulse.electric_field(t_i), pulse.beta(t_i));

    let (p_z0, p_rho0) = (0.1 * exit_z.signum(), 0.02);
    for model in [Model::SimpleMan, Model::QmfSeeded] {
        for (coulomb_force, magnetic_term) in [(false, false), (false, true), (true, true)] {
            let flags = Flags { coulomb_force, magnetic_term, model };
            let spec = match model {
                Model::SimpleMan => TrajectorySpec::simple_man(t_i, exit_z, coulomb_force, magnetic_term),
                Model::QmfSeeded => TrajectorySpec { t_i, exit_z, p_z0, p_rho0, flags },
            };
            let traj = integrate_with(&spec, &pulse, &pot, pulse.t_end(), &IntegrateOptions::default())?;
            let (pz, px) = traj.final_momentum;
            print!("{:<30} p_z^d = {pz:+.8}  p_x^d = {px:+.3e}", flags.label());
            if magnetic_term && !coulomb_force {
                let (z0, x0) = rotate_back(DetectorMomentum::new(pz, px)?, pulse.beta(t_i), c);
                print!("  rotated back: ({:+.2e}, {:+.2e}) off", z0 - spec.p_z0, x0 - spec.p_rho0);
            }
            if let Some((lz, _)) = traj.long_run_momentum {
                print!("  long run p_z = {lz:+.6}");
            }
            println!();
        }
    }
    Ok(())
}
