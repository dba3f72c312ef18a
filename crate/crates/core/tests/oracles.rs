//! Independent reference values computed from scratch in test code.

mod common;

use common::{continuum_level, dense_hamiltonian, random_state};
use nalgebra::{DMatrix, SymmetricEigen};
use strongfield::atomic::{relax, RelaxConfig};
use strongfield::phase_space::{reduce_to_z, ZWindow};
use strongfield::{CylGrid, Potential};

#[test]
fn relaxation_finds_the_dense_lowest_eigenvalue() {
    let g = CylGrid::new(-6.0, 6.0, 25, 6.0, 12).unwrap();
    let eig = SymmetricEigen::new(dense_hamiltonian(&g, 1.0, 1.0));
    let lowest = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let cfg = RelaxConfig {
        dt_imag: 0.02,
        tol: 1e-14,
        ..RelaxConfig::default()
    };
    let gs = relax(&Potential::soft_core(1.0, 1.0), &g, &cfg).unwrap();
    // the split imaginary-time step carries an O(dt²) bias
    assert!((gs.energy - lowest).abs() < 1e-8, "{} vs {lowest}", gs.energy);
}

#[test]
fn radial_oracle_reproduces_hydrogen() {
    // a → 0 leaves the bare Coulomb −½, with slow O(a) convergence
    let e = continuum_level(1.0, 1e-3);
    assert!((e + 0.5).abs() < 2e-3, "{e}");
}

#[test]
fn soft_core_grid_energy_converges_to_the_continuum() {
    let want = continuum_level(1.0, 1.0);
    let cfg = RelaxConfig {
        dt_imag: 0.02,
        tol: 1e-13,
        ..RelaxConfig::default()
    };
    let mut errs = Vec::new();
    for (n_z, n_rho) in [(121, 30), (241, 60)] {
        let g = CylGrid::new(-15.0, 15.0, n_z, 15.0, n_rho).unwrap();
        let gs = relax(&Potential::soft_core(1.0, 1.0), &g, &cfg).unwrap();
        errs.push(gs.energy - want);
    }
    // second order in the grid spacing
    println!("continuum {want}, grid errors {errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((3.5..4.5).contains(&ratio), "{errs:?}");
    assert!(errs[1].abs() < 1e-3, "{errs:?}");
    let extrapolated = (4.0 * errs[1] - errs[0]) / 3.0;
    assert!(extrapolated.abs() < 1e-4, "{extrapolated}");
}

#[test]
fn reduced_density_is_positive_semidefinite() {
    let g = CylGrid::new(-8.0, 8.0, 33, 8.0, 10).unwrap();
    for seed in [3, 17, 99] {
        let wf = random_state(&g, seed);
        let rd = reduce_to_z(&wf, ZWindow::new(-6.0, 6.0), 1 << 30).unwrap();
        let n = rd.n;
        // embed the Hermitian matrix as a real symmetric one of twice the size
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            for b in 0..n {
                let c = rd.get(a, b);
                m[(a, b)] = c.re;
                m[(a + n, b + n)] = c.re;
                m[(a, b + n)] = -c.im;
                m[(a + n, b)] = c.im;
            }
        }
        let eig = SymmetricEigen::new(m);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let trace: f64 = rd.diagonal().iter().sum();
        assert!(min > -1e-12 * trace, "seed {seed}: {min}");
        // a ρ-mixed state has more than one occupied z-mode
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        assert!(ev[2] > 1e-6 * ev[0], "{ev:?}");
    }
}
