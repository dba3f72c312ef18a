use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::reduce::ReductionMode;
use super::wigner::{PhaseSpaceMap, IMAG_RESIDUE_LIMIT};
use crate::grid::WavefunctionGrid;
use crate::{Error, Result};

/// How the off-diagonal lag `ζ` of the Wigner transform is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LagSampling {
    /// Half-grid lags from the band-limited interpolant ([`wigner_spectral`]).
    #[default]
    HalfStep,
    /// Whole-grid lags `2k dz` on tiled windows ([`super::wigner_tiled`]).
    Grid,
}

/// Values at `z_k + dz/2` of the periodic trigonometric interpolant of `f`.
///
/// The Nyquist term of an even-length sequence vanishes at the half points.
pub fn half_step_values(f: &[Complex64], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let n = f.len();
    let mut buf = f.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (j, c) in buf.iter_mut().enumerate() {
        let m = if 2 * j < n {
            j as f64
        } else if 2 * j == n {
            *c = Complex64::new(0.0, 0.0);
            continue;
        } else {
            j as f64 - n as f64
        };
        *c *= Complex64::from_polar(1.0 / n as f64, PI * m / n as f64);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Interleaves grid values and half-step values: `out[2k] = f_k`, `out[2k+1] = f(z_k + dz/2)`.
fn refine(f: &[Complex64], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let half = half_step_values(f, planner);
    f.iter().zip(&half).flat_map(|(a, b)| [*a, *b]).collect()
}

/// Wigner rows of the full box with the lag sampled at `dz/2`.
///
/// Each `ρ` column (or the `ρ`-integrated amplitude) is refined by its
/// periodic trigonometric interpolant, so `z ± ζ` always falls on the refined
/// grid and the momentum band is `|p| < π/dz`. The lag covers one period of
/// the box.
pub fn wigner_spectral(wf: &WavefunctionGrid, rows: std::ops::Range<usize>, mode: ReductionMode) -> Result<PhaseSpaceMap> {
    let g = &wf.grid;
    let (nz, nr) = (g.n_z, g.n_rho);
    if rows.is_empty() || rows.end > nz {
        return Err(Error::InvalidInput(format!("rows {rows:?} outside 0..{nz}")));
    }
    let mut planner = FftPlanner::<f64>::new();
    let w = g.radial_weights();
    // refined samples stored [refined z][column], pre-scaled by √weight
    let columns: Vec<Vec<Complex64>> = match mode {
        ReductionMode::DensityMatrix => (0..nr)
            .map(|j| {
                let col: Vec<Complex64> = (0..nz).map(|k| wf.at(k, j) * w[j].sqrt()).collect();
                refine(&col, &mut planner)
            })
            .collect(),
        ReductionMode::Amplitude => {
            let mut phi: Vec<Complex64> = (0..nz).map(|k| (0..nr).map(|j| wf.at(k, j) * w[j]).sum()).collect();
            let norm: f64 = phi.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dz();
            if norm > 0.0 {
                let s = 1.0 / norm.sqrt();
                phi.iter_mut().for_each(|c| *c *= s);
            }
            vec![refine(&phi, &mut planner)]
        }
    };
    let nc = columns.len();
    let n = 2 * nz;
    let mut table = vec![Complex64::new(0.0, 0.0); n * nc];
    for (c, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            table[i * nc + c] = *v;
        }
    }
    drop(columns);
    let at = |i: usize| &table[i * nc..(i + 1) * nc];

    let h = 0.5 * g.dz();
    let fft = planner.plan_fft_inverse(n);
    let dp = PI / (n as f64 * h);
    let p: Vec<f64> = (0..n).map(|i| (i as f64 - nz as f64) * dp).collect();
    let scale = h / PI;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut out = Vec::with_capacity(rows.len() * n);
    let mut residue = 0.0f64;
    for a in rows.clone() {
        let centre = 2 * a;
        for m in 0..=nz {
            let lo = at((centre + n - m) % n);
            let hi = at((centre + m) % n);
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in lo.iter().zip(hi) {
                acc += x * y.conj();
            }
            buf[m] = acc;
        }
        buf[0].im = 0.0;
        buf[nz].im = 0.0;
        for m in 1..nz {
            buf[n - m] = buf[m].conj();
        }
        fft.process(&mut buf);
        for i in 0..n {
            let c = buf[(i + nz) % n] * scale;
            residue = residue.max(c.im.abs());
            out.push(c.re);
        }
    }
    if residue > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImagResidue {
            residue,
            limit: IMAG_RESIDUE_LIMIT,
        });
    }
    Ok(PhaseSpaceMap {
        z: rows.map(|a| g.z(a)).collect(),
        p,
        dz: g.dz(),
        dp,
        w: out,
        time: wf.time,
        imag_residue: residue,
    })
}
