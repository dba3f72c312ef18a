//! Field-free ground state by imaginary-time relaxation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{CylGrid, WavefunctionGrid};
use crate::potential::Potential;
use crate::tdse::operators::apply_hamiltonian;
use crate::tdse::{Absorber, Propagator, Splitting};
use crate::units::LaserPulse;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxConfig {
    pub dt_imag: f64,
    /// Stop once the energy changes by less than this between iterations.
    pub tol: f64,
    pub max_iter: usize,
    /// Width of the node-free Gaussian seed.
    #[serde(default = "default_seed_width")]
    pub seed_width: f64,
    /// Span of the stationary filter applied before real-time propagation; 0 turns it off.
    #[serde(default)]
    pub filter_span: f64,
}

fn default_seed_width() -> f64 {
    1.0
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            dt_imag: 0.01,
            tol: 1e-12,
            max_iter: 200_000,
            seed_width: 1.0,
            filter_span: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub wf: WavefunctionGrid,
    pub energy: f64,
    pub iterations: usize,
    /// Energy after every renormalized iteration, seed first.
    pub energy_trace: Vec<f64>,
}

impl GroundState {
    /// `I_p = −E₀` on the grid actually used.
    pub fn ionization_potential(&self) -> f64 {
        -self.energy
    }
}

/// `⟨H₀⟩` with the propagator's discrete operators, divided by the norm.
pub fn energy_expectation(wf: &WavefunctionGrid, potential: &Potential) -> f64 {
    let v = potential.evaluate(&wf.grid);
    energy_with(wf, &v)
}

fn energy_with(wf: &WavefunctionGrid, v: &[f64]) -> f64 {
    let h_psi = WavefunctionGrid {
        grid: wf.grid,
        psi: apply_hamiltonian(&wf.grid, v, &wf.psi),
        time: wf.time,
    };
    wf.inner(&h_psi).re / wf.norm()
}

pub fn ground_state(p: &Potential, grid: &CylGrid, dt_imag: f64, tol: f64) -> Result<(WavefunctionGrid, f64)> {
    let cfg = RelaxConfig {
        dt_imag,
        tol,
        ..RelaxConfig::default()
    };
    let gs = relax(p, grid, &cfg)?;
    Ok((gs.wf, gs.energy))
}

pub fn relax(p: &Potential, grid: &CylGrid, cfg: &RelaxConfig) -> Result<GroundState> {
    p.validate()?;
    if !(cfg.dt_imag > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput("dt_imag and tol must be > 0".into()));
    }
    let s2 = 2.0 * cfg.seed_width * cfg.seed_width;
    let mut wf = WavefunctionGrid::from_fn(*grid, |z, r| Complex64::new((-(z * z + r * r) / s2).exp(), 0.0));
    wf.normalize()?;

    let v = p.evaluate(grid);
    let mut split = Splitting::new(*grid, p, Complex64::new(0.0, -cfg.dt_imag), 1.0)?;
    let mut energy = energy_with(&wf, &v);
    let mut trace = vec![energy];
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        split.apply(&mut wf.psi, 0.0);
        wf.normalize()?;
        let e = energy_with(&wf, &v);
        change = (e - energy).abs();
        energy = e;
        trace.push(e);
        if change < cfg.tol {
            return Ok(GroundState {
                wf,
                energy,
                iterations: it,
                energy_trace: trace,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        last_change: change,
    })
}

/// Projects `wf` onto the field-free eigenstate of the real-time stepper near `energy`.
///
/// Hann-weighted sum of `e^{iEn dt} Uⁿ ψ` over `span`, renormalized. Returns
/// the filtered state and `1 − |⟨filtered|wf⟩|`.
pub fn stationary_filter(
    wf: &WavefunctionGrid,
    energy: f64,
    potential: &Potential,
    dt: f64,
    span: f64,
) -> Result<(WavefunctionGrid, f64)> {
    if !(dt > 0.0 && span >= 2.0 * dt) {
        return Err(Error::InvalidInput(format!("filter needs dt > 0 and span ≥ 2 dt, got {dt} / {span}")));
    }
    let idle = LaserPulse::new(0.0, 1.0)?;
    let mut prop = Propagator::new(wf.grid, potential, idle, dt, Absorber::None)?;
    let n = (span / dt).round() as usize;
    let mut acc = vec![Complex64::new(0.0, 0.0); wf.psi.len()];
    let mut cur = wf.clone();
    for i in 0..=n {
        let w = (std::f64::consts::PI * i as f64 / n as f64).sin().powi(2);
        let ph = Complex64::from_polar(w, energy * i as f64 * dt);
        for (a, b) in acc.iter_mut().zip(&cur.psi) {
            *a += ph * b;
        }
        if i < n {
            prop.step(&mut cur);
        }
    }
    let mut out = WavefunctionGrid::from_parts(wf.grid, acc, wf.time)?;
    out.normalize()?;
    let loss = 1.0 - out.inner(wf).norm() / wf.norm().sqrt();
    Ok((out, loss))
}
