//! Three-point kinetic stencils on the cylindrical grid.
//!
//! `T = −½ (∂²_z + ∂²_ρ + ρ⁻¹ ∂_ρ)`. The radial part is discretized in
//! flux form, `(ρ_{j+½}(ψ_{j+1} − ψ_j) − ρ_{j−½}(ψ_j − ψ_{j−1})) / (ρ_j dρ²)`,
//! with `ρ_{−½} = 0`, which makes it symmetric under the `ρ_j` weight and
//! needs no explicit axis boundary row.

use num_complex::Complex64;

use crate::grid::CylGrid;

/// Constant-coefficient `−½ ∂²_z` (Dirichlet ends).
#[derive(Debug, Clone, Copy)]
pub struct AxialStencil {
    pub diag: f64,
    pub off: f64,
    pub n: usize,
}

impl AxialStencil {
    pub fn new(grid: &CylGrid) -> Self {
        let inv = 1.0 / (grid.dz() * grid.dz());
        AxialStencil {
            diag: inv,
            off: -0.5 * inv,
            n: grid.n_z,
        }
    }
}

/// `−½ (∂²_ρ + ρ⁻¹∂_ρ)` on the half-offset radial samples.
#[derive(Debug, Clone)]
pub struct RadialStencil {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl RadialStencil {
    pub fn new(grid: &CylGrid) -> Self {
        let dr = grid.drho();
        let n = grid.n_rho;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for j in 0..n {
            let rho = grid.rho(j);
            let outer = rho + 0.5 * dr;
            let inner = if j == 0 { 0.0 } else { rho - 0.5 * dr };
            let s = 0.5 / (rho * dr * dr);
            diag[j] = s * (outer + inner);
            if j + 1 < n {
                upper[j] = -s * outer;
            }
            if j > 0 {
                lower[j] = -s * inner;
            }
        }
        RadialStencil { lower, diag, upper }
    }
}

/// `T ψ` for the full kinetic operator.
pub fn apply_kinetic(grid: &CylGrid, psi: &[Complex64]) -> Vec<Complex64> {
    let ax = AxialStencil::new(grid);
    let rad = RadialStencil::new(grid);
    let (nz, nr) = (grid.n_z, grid.n_rho);
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; psi.len()];
    for k in 0..nz {
        let row = &psi[k * nr..(k + 1) * nr];
        let below = (k > 0).then(|| &psi[(k - 1) * nr..k * nr]);
        let above = (k + 1 < nz).then(|| &psi[(k + 1) * nr..(k + 2) * nr]);
        let dst = &mut out[k * nr..(k + 1) * nr];
        for j in 0..nr {
            let mut acc = row[j] * (ax.diag + rad.diag[j]);
            let neighbors = below.map_or(zero, |b| b[j]) + above.map_or(zero, |a| a[j]);
            acc += neighbors * ax.off;
            if j > 0 {
                acc += row[j - 1] * rad.lower[j];
            }
            if j + 1 < nr {
                acc += row[j + 1] * rad.upper[j];
            }
            dst[j] = acc;
        }
    }
    out
}

/// `H₀ ψ = (T + V) ψ` with `V` already sampled on the grid.
pub fn apply_hamiltonian(grid: &CylGrid, potential: &[f64], psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = apply_kinetic(grid, psi);
    for ((o, p), v) in out.iter_mut().zip(psi).zip(potential) {
        *o += p * v;
    }
    out
}
