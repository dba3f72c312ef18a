use num_complex::Complex64;
use strongfield::atomic::{energy_expectation, relax, RelaxConfig};
use strongfield::tdse::operators::apply_hamiltonian;
use strongfield::tdse::{propagate, step, Absorber, PropagationRun, Propagator, PropagatorConfig};
use strongfield::{CylGrid, LaserPulse, Potential, WavefunctionGrid};

fn small_grid() -> CylGrid {
    CylGrid::new(-12.0, 12.0, 97, 12.0, 48).unwrap()
}

fn soft_ground(grid: &CylGrid) -> (WavefunctionGrid, f64) {
    let cfg = RelaxConfig {
        dt_imag: 0.02,
        tol: 1e-13,
        ..RelaxConfig::default()
    };
    let gs = relax(&Potential::soft_core(1.0, 1.0), grid, &cfg).unwrap();
    (gs.wf, gs.energy)
}

/// Deterministic pseudo-random complex field (xorshift), zero near the edges.
fn random_state(grid: &CylGrid, seed: u64) -> WavefunctionGrid {
    let mut s = seed | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut wf = WavefunctionGrid::from_fn(*grid, |z, r| {
        let env = (-(z * z + r * r) / 20.0).exp();
        Complex64::new(env, 0.0)
    });
    for c in wf.psi.iter_mut() {
        *c *= Complex64::new(next(), next());
    }
    wf.normalize().unwrap();
    wf
}

#[test]
fn hamiltonian_is_hermitian_in_weighted_product() {
    let g = CylGrid::new(-4.0, 4.0, 17, 4.0, 10).unwrap();
    let v = Potential::coulomb(1.0).evaluate(&g);
    for seed in [3u64, 17, 99] {
        let f = random_state(&g, seed);
        let h = random_state(&g, seed * 7 + 1);
        let hf = WavefunctionGrid { psi: apply_hamiltonian(&g, &v, &f.psi), ..f.clone() };
        let hh = WavefunctionGrid { psi: apply_hamiltonian(&g, &v, &h.psi), ..h.clone() };
        let a = f.inner(&hh);
        let b = h.inner(&hf).conj();
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn norm_drift_without_absorber() {
    let g = small_grid();
    let (mut wf, _) = soft_ground(&g);
    let pulse = LaserPulse::new(0.1, 0.2).unwrap();
    let mut p = Propagator::new(g, &Potential::soft_core(1.0, 1.0), pulse, 0.05, Absorber::None).unwrap();
    wf.time = 40.0;
    for _ in 0..3 {
        let before = wf.norm();
        for _ in 0..100 {
            p.step(&mut wf);
        }
        assert!((wf.norm() - before).abs() < 1e-8);
    }
}

#[test]
fn stationary_ground_state_phase() {
    let g = small_grid();
    let pot = Potential::soft_core(1.0, 1.0);
    let (wf0, e0) = soft_ground(&g);
    let dt = 0.01;
    let pulse = LaserPulse::new(0.0, 0.057).unwrap();
    let mut p = Propagator::new(g, &pot, pulse, dt, Absorber::None).unwrap();
    let mut wf = wf0.clone();
    for _ in 0..1000 {
        p.step(&mut wf);
    }
    let t = 1000.0 * dt;
    let ov = wf0.inner(&wf);
    assert!((ov.norm() - 1.0).abs() < 1e-6, "overlap {}", ov.norm());
    // phase should be −E₀ t
    let rate = -ov.arg() / t;
    assert!((rate - e0).abs() < 1e-4, "rate {rate} vs E0 {e0}");
    assert!((energy_expectation(&wf, &pot) - e0).abs() < 1e-8);
}

#[test]
fn free_gaussian_spreads_analytically() {
    // Separable free motion: the z marginal evolves by the 1D scheme alone.
    let g = CylGrid::new(-60.0, 60.0, 4801, 4.0, 8).unwrap();
    let sigma: f64 = 3.0;
    let mut wf = WavefunctionGrid::from_fn(g, |z, r| {
        Complex64::new((-(z * z) / (2.0 * sigma * sigma)).exp() * (-(r * r) / 2.0).exp(), 0.0)
    });
    wf.normalize().unwrap();
    let far = Potential::soft_core(1e-300, 1.0); // effectively zero
    let pulse = LaserPulse::new(0.0, 0.057).unwrap();
    let dt = 0.01;
    let mut p = Propagator::new(g, &far, pulse, dt, Absorber::None).unwrap();
    let steps = 5000;
    for _ in 0..steps {
        p.step(&mut wf);
    }
    let t = steps as f64 * dt;
    let width = (wf.z_moment(|z| z * z) / wf.norm()).sqrt();
    let exact = (sigma * sigma / 2.0 * (1.0 + t * t / sigma.powi(4))).sqrt();
    assert!(((width - exact) / exact).abs() < 1e-4, "{width} vs {exact}");
}

#[test]
fn forward_then_backward_returns_initial_state() {
    let g = small_grid();
    let pot = Potential::soft_core(1.0, 1.0);
    let (mut wf, _) = soft_ground(&g);
    wf.time = 30.0;
    let start = wf.clone();
    let pulse = LaserPulse::new(0.08, 0.2).unwrap();
    let mut fwd = Propagator::new(g, &pot, pulse, 0.05, Absorber::None).unwrap();
    let mut bwd = Propagator::new(g, &pot, pulse, -0.05, Absorber::None).unwrap();
    for _ in 0..200 {
        fwd.step(&mut wf);
    }
    assert!(start.inner(&wf).norm() < 1.0 - 1e-6, "field should move the state");
    for _ in 0..200 {
        bwd.step(&mut wf);
    }
    assert!(start.inner(&wf).norm() > 1.0 - 1e-6);
}

#[test]
fn zero_field_run_keeps_state() {
    let g = small_grid();
    let pot = Potential::soft_core(1.0, 1.0);
    let (wf, _) = soft_ground(&g);
    let cfg = PropagatorConfig {
        dt: 0.05,
        t_end: 10.0,
        snapshot_times: vec![0.0, 3.333, 10.0],
        absorber: Absorber::None,
        diagnostic_stride: 5,
    };
    let run = propagate(PropagationRun::new(wf.clone(), LaserPulse::new(0.0, 0.2).unwrap(), pot, cfg)).unwrap();
    assert_eq!(run.snapshots.len(), 3);
    assert!((run.snapshots[1].time - 3.333).abs() <= 0.025);
    let last = run.snapshots.last().unwrap();
    assert!((wf.inner(last).norm() - 1.0).abs() < 1e-6);
    assert!(run.diagnostics.z_mean.iter().all(|z| z.abs() < 1e-10));
}

#[test]
fn ehrenfest_acceleration_matches_force() {
    let g = small_grid();
    let pot = Potential::soft_core(1.0, 1.0);
    let (mut wf, _) = soft_ground(&g);
    let pulse = LaserPulse::new(0.05, 0.25).unwrap();
    let dt = 0.02;
    let mut p = Propagator::new(g, &pot, pulse, dt, Absorber::None).unwrap();
    let n = (pulse.duration() / dt) as usize;
    let mut z = Vec::with_capacity(n);
    let mut force = Vec::with_capacity(n);
    for _ in 0..n {
        z.push(wf.expectation_z());
        let dv = WavefunctionGrid::from_fn(g, |zz, r| Complex64::new(pot.dv_dz(zz, r), 0.0));
        let mean_dv: f64 = wf
            .psi
            .iter()
            .zip(&dv.psi)
            .enumerate()
            .map(|(i, (c, d))| c.norm_sqr() * d.re * 2.0 * std::f64::consts::PI * g.rho(i % g.n_rho) * g.drho())
            .sum::<f64>()
            * g.dz();
        force.push(-mean_dv - pulse.electric_field(wf.time));
        p.step(&mut wf);
    }
    let mut resid = 0.0;
    let mut scale = 0.0;
    for i in 1..n - 1 {
        let acc = (z[i + 1] - 2.0 * z[i] + z[i - 1]) / (dt * dt);
        resid += (acc - force[i]).powi(2);
        scale += force[i].powi(2);
    }
    let rel = (resid / scale).sqrt();
    assert!(rel < 0.05, "Ehrenfest RMS relative residual {rel}");
}

#[test]
fn single_step_function_matches_propagator() {
    let g = small_grid();
    let pot = Potential::soft_core(1.0, 1.0);
    let (wf, _) = soft_ground(&g);
    let pulse = LaserPulse::new(0.1, 0.2).unwrap();
    let a = step(&wf, 20.0, 0.05, &pulse, &pot).unwrap();
    let mut p = Propagator::new(g, &pot, pulse, 0.05, Absorber::None).unwrap();
    let mut b = wf.clone();
    b.time = 20.0;
    p.step(&mut b);
    assert_eq!(a.psi, b.psi);
    assert!((a.time - 20.05).abs() < 1e-12);
}
