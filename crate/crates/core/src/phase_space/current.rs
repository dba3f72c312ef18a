use num_complex::Complex64;
use rustfft::FftPlanner;

use super::moments::MomentProfiles;
use super::reduce::ZWindow;
use crate::grid::WavefunctionGrid;
use crate::Result;

/// QMF straight from the axial probability current,
/// `Im Σ_ρ Ψ* ∂_zΨ w_ρ / Σ_ρ |Ψ|² w_ρ`, with `∂_z` the exact derivative of
/// the box-periodic trigonometric interpolant.
///
/// Returned as profiles with `moments = [P₀, j_z]`.
pub fn qmf_from_current(wf: &WavefunctionGrid, window: ZWindow, p0_floor: f64) -> Result<MomentProfiles> {
    let (lo, hi) = window.indices(wf)?;
    let g = &wf.grid;
    let nz = g.n_z;
    let n = nz;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * g.dz());
    let w = g.radial_weights();
    let mut density = vec![0.0; nz];
    let mut current = vec![0.0; nz];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, wj) in w.iter().enumerate() {
        for k in 0..nz {
            buf[k] = wf.at(k, j);
        }
        fwd.process(&mut buf);
        for (m, c) in buf.iter_mut().enumerate() {
            let km = if 2 * m < n {
                m as f64
            } else if 2 * m == n {
                0.0
            } else {
                m as f64 - n as f64
            };
            *c *= Complex64::new(0.0, km * dk / n as f64);
        }
        inv.process(&mut buf);
        for k in lo..=hi {
            let psi = wf.at(k, j);
            density[k] += wj * psi.norm_sqr();
            current[k] += wj * (psi.conj() * buf[k]).im;
        }
    }
    let z = (lo..=hi).map(|k| g.z(k)).collect();
    let moments = vec![density[lo..=hi].to_vec(), current[lo..=hi].to_vec()];
    Ok(MomentProfiles::from_moments(z, g.dz(), moments, p0_floor, wf.time))
}

/// Density-weighted mean radial velocity `Σ w Im(Ψ*∂_ρΨ) / Σ w |Ψ|²` on the row nearest `z`.
pub fn radial_velocity(wf: &WavefunctionGrid, z: f64) -> f64 {
    let g = &wf.grid;
    let k = g.nearest_z(z);
    let nr = g.n_rho;
    let h = g.drho();
    let w = g.radial_weights();
    let (mut flux, mut dens) = (0.0, 0.0);
    for j in 0..nr {
        let psi = wf.at(k, j);
        // mirror ghost below the axis, one-sided at the outer edge
        let d = if j == 0 {
            (wf.at(k, 1) - psi) / (2.0 * h)
        } else if j + 1 == nr {
            (psi - wf.at(k, j - 1)) / h
        } else {
            (wf.at(k, j + 1) - wf.at(k, j - 1)) / (2.0 * h)
        };
        flux += w[j] * (psi.conj() * d).im;
        dens += w[j] * psi.norm_sqr();
    }
    if dens > 0.0 {
        flux / dens
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CylGrid;
    use crate::phase_space::{moments, reduce_to_z, wigner, DEFAULT_MEMORY_BUDGET};

    fn grid() -> CylGrid {
        CylGrid::new(-15.0, 15.0, 301, 8.0, 40).unwrap()
    }

    #[test]
    fn plane_wave_packet_current() {
        let wf = WavefunctionGrid::from_fn(grid(), |z, r| {
            Complex64::from_polar((-(z * z) / 6.0 - r * r / 2.0).exp(), 0.8 * z)
        });
        let m = qmf_from_current(&wf, ZWindow::new(-15.0, 15.0), 1e-8).unwrap();
        for (q, ok) in m.qmf.iter().zip(&m.mask) {
            if *ok {
                assert!((q - 0.8).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn agrees_with_wigner_moments() {
        let wf = WavefunctionGrid::from_fn(grid(), |z, r| {
            Complex64::from_polar((-(z - 2.0).powi(2) / 4.0 - r * r / 2.0).exp(), 0.6 * z + 0.05 * z * z)
                + Complex64::from_polar(0.4 * (-(z + 3.0).powi(2) / 3.0 - r * r / 3.0).exp(), -1.2 * z)
        });
        let win = ZWindow::new(-15.0, 15.0);
        let cur = qmf_from_current(&wf, win, 1e-8).unwrap();
        let wig = moments(&wigner(&reduce_to_z(&wf, win, DEFAULT_MEMORY_BUDGET).unwrap()).unwrap(), 1, 1e-8);
        let mut worst = 0.0f64;
        for a in 0..cur.z.len() {
            if cur.mask[a] && wig.mask[a] {
                worst = worst.max((cur.qmf[a] - wig.qmf[a]).abs());
            }
        }
        assert!(worst < 1e-8, "{worst:e}");
    }

    #[test]
    fn radial_outflow_has_positive_velocity() {
        let wf = WavefunctionGrid::from_fn(grid(), |z, r| {
            Complex64::from_polar((-(z * z) / 2.0 - r * r / 8.0).exp(), 0.3 * r * r)
        });
        assert!(radial_velocity(&wf, 0.0) > 0.0);
        let real = WavefunctionGrid::from_fn(grid(), |z, r| Complex64::new((-(z * z) - r * r).exp(), 0.0));
        assert_eq!(radial_velocity(&real, 0.0), 0.0);
    }
}
