use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::WavefunctionGrid;
use crate::{Error, Result};

/// 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMode {
    /// Partial trace over `ρ`.
    #[default]
    DensityMatrix,
    /// Pure state `φ(z) ∝ ∫ Ψ(z, ρ) 2πρ dρ`, renormalized.
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZWindow {
    pub z_lo: f64,
    pub z_hi: f64,
}

impl ZWindow {
    pub fn new(z_lo: f64, z_hi: f64) -> Self {
        ZWindow { z_lo, z_hi }
    }

    /// Inclusive grid index range covered by the window.
    pub fn indices(&self, wf: &WavefunctionGrid) -> Result<(usize, usize)> {
        let g = &wf.grid;
        let tol = 1e-9 * g.dz();
        if !(self.z_lo < self.z_hi) || self.z_lo < g.z_min - tol || self.z_hi > g.z_max + tol {
            return Err(Error::InvalidInput(format!(
                "window [{}, {}] not inside grid [{}, {}]",
                self.z_lo, self.z_hi, g.z_min, g.z_max
            )));
        }
        let lo = ((self.z_lo - g.z_min) / g.dz() - 1e-9).ceil().max(0.0) as usize;
        let hi = (((self.z_hi - g.z_min) / g.dz() + 1e-9).floor() as usize).min(g.n_z - 1);
        Ok((lo, hi))
    }
}

/// Hermitian matrix `ρ_red(z_a, z_b)` on `n` consecutive `z` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    /// `z` of the first sample.
    pub z0: f64,
    pub dz: f64,
    pub n: usize,
    /// Row-major, `data[a * n + b] = ρ_red(z_a, z_b)`.
    pub data: Vec<Complex64>,
    pub time: f64,
}

impl ReducedDensity {
    /// `ρ_red(z, z′) = φ(z) φ*(z′)` for a one-dimensional amplitude.
    pub fn from_pure(z0: f64, dz: f64, amplitude: &[Complex64], time: f64) -> Self {
        let n = amplitude.len();
        let mut data = Vec::with_capacity(n * n);
        for a in amplitude {
            for b in amplitude {
                data.push(a * b.conj());
            }
        }
        ReducedDensity { z0, dz, n, data, time }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.data[a * self.n + b]
    }

    pub fn z(&self, a: usize) -> f64 {
        self.z0 + a as f64 * self.dz
    }

    pub fn z_samples(&self) -> Vec<f64> {
        (0..self.n).map(|a| self.z(a)).collect()
    }

    /// `P₀(z) = ρ_red(z, z)`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|a| self.get(a, a).re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum::<f64>() * self.dz
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.n {
            for b in a..self.n {
                worst = worst.max((self.get(a, b) - self.get(b, a).conj()).norm());
            }
        }
        worst
    }
}

fn check_budget(points: usize, budget: u64) -> Result<()> {
    let bytes = (points as u64) * (points as u64) * 16;
    if bytes > budget {
        return Err(Error::WindowTooLarge { points, bytes, budget });
    }
    Ok(())
}

/// Partial trace over `ρ` (midpoint weights) on the samples inside `window`.
pub fn reduce_to_z(wf: &WavefunctionGrid, window: ZWindow, memory_budget: u64) -> Result<ReducedDensity> {
    let (lo, hi) = window.indices(wf)?;
    let n = hi - lo + 1;
    check_budget(n, memory_budget)?;
    let g = &wf.grid;
    let w = g.radial_weights();
    let nr = g.n_rho;
    // pre-scale one factor by √w so each entry is a plain dot product
    let scaled: Vec<Complex64> = (lo..=hi)
        .flat_map(|k| (0..nr).map(move |j| (k, j)))
        .map(|(k, j)| wf.at(k, j) * w[j].sqrt())
        .collect();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for a in 0..n {
        let ra = &scaled[a * nr..(a + 1) * nr];
        for b in a..n {
            let rb = &scaled[b * nr..(b + 1) * nr];
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in ra.iter().zip(rb) {
                acc += x * y.conj();
            }
            data[a * n + b] = acc;
            data[b * n + a] = acc.conj();
        }
        // exact real diagonal
        data[a * n + a].im = 0.0;
    }
    Ok(ReducedDensity {
        z0: g.z(lo),
        dz: g.dz(),
        n,
        data,
        time: wf.time,
    })
}

/// Pure-state reduction of the `ρ`-integrated amplitude, normalized over the window.
pub fn reduce_amplitude(wf: &WavefunctionGrid, window: ZWindow, memory_budget: u64) -> Result<ReducedDensity> {
    let (lo, hi) = window.indices(wf)?;
    let n = hi - lo + 1;
    check_budget(n, memory_budget)?;
    let g = &wf.grid;
    let w = g.radial_weights();
    let mut phi: Vec<Complex64> = (lo..=hi)
        .map(|k| (0..g.n_rho).map(|j| wf.at(k, j) * w[j]).sum())
        .collect();
    let norm: f64 = phi.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dz();
    if norm > 0.0 {
        let s = 1.0 / norm.sqrt();
        phi.iter_mut().for_each(|c| *c *= s);
    }
    Ok(ReducedDensity::from_pure(g.z(lo), g.dz(), &phi, wf.time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CylGrid;

    fn separable() -> (WavefunctionGrid, Vec<Complex64>) {
        let g = CylGrid::new(-6.0, 6.0, 61, 6.0, 30).unwrap();
        let f = |z: f64| Complex64::from_polar((-(z - 0.5) * (z - 0.5) / 2.0).exp(), 0.3 * z);
        let wr = g.radial_weights();
        let gnorm: f64 = (0..g.n_rho).map(|j| (-(g.rho(j).powi(2))).exp() * wr[j]).sum();
        let wf = WavefunctionGrid::from_fn(g, |z, r| f(z) * ((-(r * r) / 2.0).exp() / gnorm.sqrt()));
        let fz = (0..g.n_z).map(|k| f(g.z(k))).collect();
        (wf, fz)
    }

    #[test]
    fn separable_state_reduces_to_outer_product() {
        let (wf, fz) = separable();
        let rd = reduce_to_z(&wf, ZWindow::new(-6.0, 6.0), DEFAULT_MEMORY_BUDGET).unwrap();
        assert_eq!(rd.n, 61);
        for a in 0..rd.n {
            for b in 0..rd.n {
                assert!((rd.get(a, b) - fz[a] * fz[b].conj()).norm() < 1e-10);
            }
        }
        assert!(rd.hermiticity_residual() < 1e-12);
        let norm_z: f64 = wf.z_density().iter().sum::<f64>() * wf.grid.dz();
        assert!((rd.trace() - norm_z).abs() < 1e-12);
    }

    #[test]
    fn window_selects_inclusive_range() {
        let (wf, _) = separable();
        let (lo, hi) = ZWindow::new(-1.0, 1.0).indices(&wf).unwrap();
        assert_eq!((wf.grid.z(lo), wf.grid.z(hi)), (-1.0, 1.0));
        assert!(ZWindow::new(-7.0, 1.0).indices(&wf).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let (wf, _) = separable();
        let err = reduce_to_z(&wf, ZWindow::new(-6.0, 6.0), 1000).unwrap_err();
        assert!(matches!(err, Error::WindowTooLarge { points: 61, .. }));
    }

    #[test]
    fn amplitude_mode_is_normalized_pure_state() {
        let (wf, _) = separable();
        let rd = reduce_amplitude(&wf, ZWindow::new(-6.0, 6.0), DEFAULT_MEMORY_BUDGET).unwrap();
        assert!((rd.trace() - 1.0).abs() < 1e-12);
    }
}
