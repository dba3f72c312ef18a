//! Wigner function of a two-packet superposition.
//!
//! Run with: cargo run --release --example wigner_cat
//!
//! Two counter-propagating Gaussians along `z` interfere midway; the Wigner
//! map is negative there while its marginals stay positive. The QMF from the
//! Wigner moments is compared with the one from the probability current.

use num_complex::Complex64;
use strongfield::phase_space::{moments, qmf_from_current, wigner_spectral, ReductionMode, ZWindow};
use strongfield::{CylGrid, WavefunctionGrid};

fn main() -> strongfield::Result<()> {
    let grid = CylGrid::new(-20.0, 20.0, 401, 8.0, 32)?;
    let mut wf = WavefunctionGrid::from_fn(grid, |z, r| {
        let radial = (-r * r / 2.0).exp();
        let left = Complex64::from_polar((-(z + 5.0).powi(2) / 2.0).exp(), 1.0 * z);
        let right = Complex64::from_polar((-(z - 5.0).powi(2) / 2.0).exp(), -1.0 * z);
        (left + right) * radial
    });
    wf.normalize()?;

    let map = wigner_spectral(&wf, 0..grid.n_z, ReductionMode::DensityMatrix)?;
    let negative: f64 = map.w.iter().filter(|w| **w < 0.0).sum::<f64>() * map.dz * map.dp;
    let density = wf.z_density();
    let marginal = map.position_marginal();
    let worst = marginal.iter().zip(&density).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("total {:.12}  negative volume {negative:.4}  max|W| {:.4} (1/π = {:.4})", map.total(), map.max_abs(), std::f64::consts::FRAC_1_PI);
    println!("position marginal vs density: max error {worst:.2e}");

    let origin = grid.origin_index();
    let row = map.row(origin);
    println!("\nW(0, p), the interference fringe:");
    for k in (0..map.n_p()).filter(|k| map.p[*k].abs() <= 3.0).step_by(3) {
        println!("  p = {:+6.3}  W = {:+.5}", map.p[k], row[k]);
    }

    let wig = moments(&map, 2, 1e-8);
    let cur = qmf_from_current(&wf, ZWindow::new(grid.z_min, grid.z_max), 1e-8)?;
    println!("\n{:>6} {:>10} {:>10} {:>10}", "z", "density", "qmf(W)", "qmf(j)");
    for z in [-8.0, -5.0, -3.5, -2.0, 2.0, 3.5, 5.0, 8.0] {
        let a = grid.nearest_z(z);
        println!("{z:6.1} {:10.3e} {:+10.5} {:+10.5}", wig.p0()[a], wig.qmf[a], cur.qmf[a]);
    }
    Ok(())
}
