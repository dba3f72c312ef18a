//! Few-cycle pulse acting on hydrogen at desk scale.
//!
//! Run with: cargo run --release --example propagate_pulse
//!
//! Relaxes the ground state, filters it onto the stationary state of the
//! real-time stepper, propagates through the first half of the pulse and
//! prints the norm, `⟨z⟩` and the probability beyond the tunnel exit along
//! the way. At each snapshot the QMF from the Wigner moments is
//! compared with the one from the probability current.

use std::time::Instant;

use strongfield::atomic::{relax, stationary_filter, RelaxConfig};
use strongfield::classical::exit_point;
use strongfield::phase_space::{moments, qmf_from_current, wigner_spectral, ReductionMode, ZWindow};
use strongfield::tdse::{propagate_into, Absorber, OutgoingProbe, PropagatorConfig};
use strongfield::{CylGrid, LaserPulse, Potential, WavefunctionGrid};

fn main() -> strongfield::Result<()> {
    let grid = CylGrid::new(-80.0, 80.0, 801, 40.0, 200)?;
    let pot = Potential::coulomb(1.0);
    let pulse = LaserPulse::new(0.095, 0.057)?;
    let start = Instant::now();
    let gs = relax(&pot, &grid, &RelaxConfig::default())?;
    println!("ground state E0 = {:.6} ({:.1?})", gs.energy, start.elapsed());
    let dt = 0.0125;
    let (initial, loss) = stationary_filter(&gs.wf, gs.energy, &pot, dt, 40.0)?;
    println!("stationary filter removed {loss:.2e} of the amplitude");

    let exit = exit_point(&pot, &pulse, 145.0, -gs.energy)?;
    let probe = OutgoingProbe { side: exit.signum(), z_ref: exit.abs() };
    let config = PropagatorConfig {
        dt,
        t_end: 175.0,
        snapshot_times: vec![145.0, 150.0, 160.0, pulse.t_peak(), 170.0],
        absorber: Absorber::Mask { width: 15.0, exponent: 0.125 },
        diagnostic_stride: 80,
    };
    let start = Instant::now();
    let mut snaps: Vec<WavefunctionGrid> = Vec::new();
    let diag = propagate_into(&initial, &pulse, &pot, &config, &mut snaps, Some(&probe))?;
    println!("propagated to t = {} ({:.1?}), exit at t=145: z = {exit:.3}", config.t_end, start.elapsed());
    for i in (0..diag.time.len()).step_by(10) {
        println!(
            "t = {:7.2}  E = {:+.4}  norm = {:.6}  <z> = {:+.4e}  P(beyond exit) = {:.3e}",
            diag.time[i],
            pulse.electric_field(diag.time[i]),
            diag.norm[i],
            diag.z_mean[i],
            diag.outgoing[i]
        );
    }
    let window = ZWindow::new(grid.z_min, grid.z_max);
    for wf in &snaps {
        let wig = moments(&wigner_spectral(wf, 0..grid.n_z, ReductionMode::DensityMatrix)?, 1, 1e-8);
        let cur = qmf_from_current(wf, window, 1e-8)?;
        let (mut sum, mut n, mut worst) = (0.0, 0, 0.0f64);
        for a in 0..wig.z.len() {
            if wig.mask[a] {
                let d = wig.qmf[a] - cur.qmf[a];
                sum += d * d;
                n += 1;
                worst = worst.max(d.abs());
            }
        }
        println!(
            "t = {:7.2}  qmf rms difference = {:.3e} (max {:.3e}, {n} samples)  qmf at exit = {:+.4}",
            wf.time,
            (sum / n as f64).sqrt(),
            worst,
            wig.qmf_at(exit).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
