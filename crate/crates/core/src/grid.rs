//! Cylindrical `(z, ρ)` grid and complex fields sampled on it.
//!
//! `z` samples are `z_min + k dz` for `k = 0..n_z` and include `z = 0`.
//! `ρ` samples sit at `(j + ½) dρ`, so the axis itself is never sampled.
//! Fields vanish on the ghost points just outside the grid (Dirichlet).
//!
//! Quadrature: midpoint in `ρ` with weight `2πρ_j dρ`; trapezoid in `z`,
//! which with zero ghost values reduces to a uniform weight `dz`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
    pub rho_max: f64,
    pub n_rho: usize,
}

impl CylGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(z_min: f64, z_max: f64, n_z: usize, rho_max: f64, n_rho: usize) -> Result<Self> {
        let g = CylGrid {
            z_min,
            z_max,
            n_z,
            rho_max,
            n_rho,
        };
        let problems = g.problems();
        if problems.is_empty() {
            Ok(g)
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    /// Every violated invariant, as `field: reason` strings.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_z < Self::MIN_POINTS {
            out.push(format!("n_z: must be ≥ {}", Self::MIN_POINTS));
        }
        if self.n_rho < Self::MIN_POINTS {
            out.push(format!("n_rho: must be ≥ {}", Self::MIN_POINTS));
        }
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_min < 0.0 && self.z_max > 0.0) {
            out.push("z_min/z_max: need z_min < 0 < z_max".to_string());
        } else if self.n_z >= 2 {
            let steps = -self.z_min / self.dz();
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                out.push("z_min: z = 0 must be a grid point".to_string());
            }
        }
        if !(self.rho_max.is_finite() && self.rho_max > 0.0) {
            out.push("rho_max: must be > 0".to_string());
        }
        out
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_z - 1) as f64
    }

    pub fn drho(&self) -> f64 {
        self.rho_max / self.n_rho as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        self.z_min + k as f64 * self.dz()
    }

    pub fn rho(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.drho()
    }

    pub fn len(&self) -> usize {
        self.n_z * self.n_rho
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, k: usize, j: usize) -> usize {
        k * self.n_rho + j
    }

    /// Index of the grid point `z = 0`.
    pub fn origin_index(&self) -> usize {
        (-self.z_min / self.dz()).round() as usize
    }

    /// Nearest `z` index, clamped to the grid.
    pub fn nearest_z(&self, z: f64) -> usize {
        let k = ((z - self.z_min) / self.dz()).round();
        k.clamp(0.0, (self.n_z - 1) as f64) as usize
    }

    /// `2πρ_j dρ`, the radial quadrature weight.
    pub fn radial_weights(&self) -> Vec<f64> {
        let dr = self.drho();
        (0..self.n_rho).map(|j| 2.0 * PI * self.rho(j) * dr).collect()
    }

    pub fn z_samples(&self) -> Vec<f64> {
        (0..self.n_z).map(|k| self.z(k)).collect()
    }
}

/// Complex field on a [`CylGrid`], stored `z`-major (`psi[k * n_rho + j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionGrid {
    pub grid: CylGrid,
    pub psi: Vec<Complex64>,
    pub time: f64,
}

impl WavefunctionGrid {
    pub fn zeros(grid: CylGrid) -> Self {
        WavefunctionGrid {
            grid,
            psi: vec![Complex64::new(0.0, 0.0); grid.len()],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: CylGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut psi = Vec::with_capacity(grid.len());
        for k in 0..grid.n_z {
            let z = grid.z(k);
            for j in 0..grid.n_rho {
                psi.push(f(z, grid.rho(j)));
            }
        }
        WavefunctionGrid { grid, psi, time: 0.0 }
    }

    pub fn from_parts(grid: CylGrid, psi: Vec<Complex64>, time: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} samples, grid expects {}",
                psi.len(),
                grid.len()
            )));
        }
        Ok(WavefunctionGrid { grid, psi, time })
    }

    #[inline]
    pub fn at(&self, k: usize, j: usize) -> Complex64 {
        self.psi[self.grid.index(k, j)]
    }

    /// Discrete `⟨self|other⟩` with the `2πρ dρ dz` weight.
    pub fn inner(&self, other: &WavefunctionGrid) -> Complex64 {
        let w = self.grid.radial_weights();
        let n_rho = self.grid.n_rho;
        let mut acc = Complex64::new(0.0, 0.0);
        for (row_a, row_b) in self.psi.chunks(n_rho).zip(other.psi.chunks(n_rho)) {
            for ((a, b), wj) in row_a.iter().zip(row_b).zip(&w) {
                acc += a.conj() * b * wj;
            }
        }
        acc * self.grid.dz()
    }

    /// `∬ |Ψ|² 2πρ dρ dz`.
    pub fn norm(&self) -> f64 {
        let w = self.grid.radial_weights();
        let mut acc = 0.0;
        for row in self.psi.chunks(self.grid.n_rho) {
            for (a, wj) in row.iter().zip(&w) {
                acc += a.norm_sqr() * wj;
            }
        }
        acc * self.grid.dz()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput(format!("cannot normalize a field with norm {n}")));
        }
        let s = 1.0 / n.sqrt();
        self.psi.iter_mut().for_each(|c| *c *= s);
        Ok(n)
    }

    /// `∬ z |Ψ|² 2πρ dρ dz`; equals `⟨z⟩` for a normalized field.
    pub fn expectation_z(&self) -> f64 {
        self.z_moment(|z| z)
    }

    /// `∬ f(z) |Ψ|² 2πρ dρ dz`.
    pub fn z_moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        let w = self.grid.radial_weights();
        let mut acc = 0.0;
        for (k, row) in self.psi.chunks(self.grid.n_rho).enumerate() {
            let dens: f64 = row.iter().zip(&w).map(|(a, wj)| a.norm_sqr() * wj).sum();
            acc += f(self.grid.z(k)) * dens;
        }
        acc * self.grid.dz()
    }

    /// `P(z)`: density integrated over `ρ`, per unit length in `z`.
    pub fn z_density(&self) -> Vec<f64> {
        let w = self.grid.radial_weights();
        self.psi
            .chunks(self.grid.n_rho)
            .map(|row| row.iter().zip(&w).map(|(a, wj)| a.norm_sqr() * wj).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
