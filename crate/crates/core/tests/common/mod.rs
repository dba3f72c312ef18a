//! Reference values built from scratch, shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use strongfield::{CylGrid, WavefunctionGrid};

/// Dense `H` on the cylindrical grid, symmetrized by `√ρ_j`.
pub fn dense_hamiltonian(g: &CylGrid, charge: f64, a: f64) -> DMatrix<f64> {
    let (nz, nr) = (g.n_z, g.n_rho);
    let (dz, dr) = (g.dz(), g.drho());
    let n = nz * nr;
    let mut h = DMatrix::zeros(n, n);
    let idx = |k: usize, j: usize| k * nr + j;
    for k in 0..nz {
        for j in 0..nr {
            let rho = (j as f64 + 0.5) * dr;
            let z = g.z_min + k as f64 * dz;
            let i = idx(k, j);
            let up = rho + dr / 2.0;
            let down = if j == 0 { 0.0 } else { rho - dr / 2.0 };
            h[(i, i)] = 1.0 / (dz * dz) + (up + down) / (2.0 * rho * dr * dr) - charge / (z * z + rho * rho + a * a).sqrt();
            if k + 1 < nz {
                h[(i, idx(k + 1, j))] = -0.5 / (dz * dz);
                h[(idx(k + 1, j), i)] = -0.5 / (dz * dz);
            }
            if j + 1 < nr {
                // −ρ_{j+½}/(2dρ²) between √ρ_j and √ρ_{j+1}
                let rho1 = rho + dr;
                let off = -up / (2.0 * dr * dr * (rho * rho1).sqrt());
                h[(i, idx(k, j + 1))] = off;
                h[(idx(k, j + 1), i)] = off;
            }
        }
    }
    h
}

/// Lowest `ℓ = 0` level of `−½u″ − Z/√(r²+a²)` on `(0, r_max)`, Sturm bisection.
pub fn radial_level(charge: f64, a: f64, r_max: f64, n: usize) -> f64 {
    let h = r_max / (n + 1) as f64;
    let d: Vec<f64> = (1..=n)
        .map(|i| {
            let r = i as f64 * h;
            1.0 / (h * h) - charge / (r * r + a * a).sqrt()
        })
        .collect();
    let e2 = (0.5 / (h * h)).powi(2);
    let below = |x: f64| {
        let mut q = 1.0;
        let mut count = 0;
        for (i, di) in d.iter().enumerate() {
            q = di - x - if i == 0 { 0.0 } else { e2 / q };
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let (mut lo, mut hi) = (-charge / a - 1.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn continuum_level(charge: f64, a: f64) -> f64 {
    let coarse = radial_level(charge, a, 40.0, 8000);
    let fine = radial_level(charge, a, 40.0, 16001);
    (4.0 * fine - coarse) / 3.0
}

/// Deterministic pseudo-random complex field (xorshift) under a Gaussian envelope.
pub fn random_state(g: &CylGrid, seed: u64) -> WavefunctionGrid {
    let mut s = seed | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut wf = WavefunctionGrid::from_fn(*g, |z, r| Complex64::new((-(z * z + r * r) / 10.0).exp(), 0.0));
    for c in wf.psi.iter_mut() {
        *c *= Complex64::new(next(), next());
    }
    wf.normalize().unwrap();
    wf
}
