//! Binding potentials of the single active electron.

use serde::{Deserialize, Serialize};

use crate::grid::CylGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Coulomb,
    SoftCore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential {
    pub kind: PotentialKind,
    pub charge: f64,
    /// Softening length `a`; ignored for the bare Coulomb kind.
    #[serde(default)]
    pub softening: f64,
}

impl Potential {
    pub fn coulomb(charge: f64) -> Self {
        Potential {
            kind: PotentialKind::Coulomb,
            charge,
            softening: 0.0,
        }
    }

    pub fn soft_core(charge: f64, softening: f64) -> Self {
        Potential {
            kind: PotentialKind::SoftCore,
            charge,
            softening,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.charge > 0.0 && self.charge.is_finite()) {
            return Err(Error::InvalidInput(format!("charge must be > 0, got {}", self.charge)));
        }
        if self.kind == PotentialKind::SoftCore && !(self.softening > 0.0) {
            return Err(Error::InvalidInput("soft-core softening must be > 0".into()));
        }
        Ok(())
    }

    /// Softening length in effect, zero for the bare Coulomb kind.
    pub fn core_length(&self) -> f64 {
        self.a2().sqrt()
    }

    fn a2(&self) -> f64 {
        match self.kind {
            PotentialKind::Coulomb => 0.0,
            PotentialKind::SoftCore => self.softening * self.softening,
        }
    }

    #[inline]
    pub fn value(&self, z: f64, rho: f64) -> f64 {
        -self.charge / (z * z + rho * rho + self.a2()).sqrt()
    }

    /// `∂V/∂z`.
    #[inline]
    pub fn dv_dz(&self, z: f64, rho: f64) -> f64 {
        let s = z * z + rho * rho + self.a2();
        self.charge * z / (s * s.sqrt())
    }

    /// Samples `V` on every grid point, `z`-major like the wavefunction.
    pub fn evaluate(&self, grid: &CylGrid) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        for k in 0..grid.n_z {
            let z = grid.z(k);
            for j in 0..grid.n_rho {
                out.push(self.value(z, grid.rho(j)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> CylGrid {
        CylGrid::new(-10.0, 10.0, 101, 8.0, 40).unwrap()
    }

    #[test]
    fn soft_core_near_axis() {
        let g = grid();
        let v = Potential::soft_core(1.0, 1.0).evaluate(&g);
        let k0 = g.origin_index();
        let half = g.drho() / 2.0;
        let expect = -1.0 / (1.0 + half * half).sqrt();
        assert!((v[g.index(k0, 0)] - expect).abs() < 1e-15);
    }

    #[test]
    fn coulomb_finite_on_grid() {
        let g = grid();
        let v = Potential::coulomb(1.0).evaluate(&g);
        assert!(v.iter().all(|x| x.is_finite() && *x < 0.0));
        let k2 = g.nearest_z(2.0);
        let half = g.drho() / 2.0;
        assert!((v[g.index(k2, 0)] + 1.0 / (4.0 + half * half).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn far_corner_bounded() {
        let g = grid();
        for p in [Potential::coulomb(1.0), Potential::soft_core(1.0, 1.0)] {
            let v = p.evaluate(&g);
            let corner = v[g.index(g.n_z - 1, g.n_rho - 1)];
            assert!(corner.abs() < 1.0 / g.z_max.min(g.rho_max));
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let p = Potential::soft_core(1.0, 0.7);
        let h = 1e-5;
        for &(z, r) in &[(0.3, 0.2), (-2.0, 1.0), (5.0, 0.05)] {
            let fd = (p.value(z + h, r) - p.value(z - h, r)) / (2.0 * h);
            assert!((fd - p.dv_dz(z, r)).abs() < 1e-8);
        }
    }
}
