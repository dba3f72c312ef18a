use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operators::{AxialStencil, RadialStencil};
use super::tridiag::{AxialCayley, RadialCayley};
use crate::grid::{CylGrid, WavefunctionGrid};
use crate::potential::Potential;
use crate::units::LaserPulse;
use crate::{Error, Result};

/// Convergence order in `dt` of the symmetric splitting below.
pub const SCHEME_ORDER: u32 = 2;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// One symmetric step `C_z(h/2) C_ρ(h/2) P(h) C_ρ(h/2) C_z(h/2)` of
/// `exp(−iHh)`, where `C` are Crank–Nicolson (Cayley) factors of the two
/// kinetic directions and `P = exp(−i(V + qEz)h)` is the diagonal part.
///
/// `h` may be complex: `h = −i·τ` gives imaginary-time relaxation.
/// For real `h` every factor is unitary in the `2πρ dρ dz` inner product.
#[derive(Debug, Clone)]
pub struct Splitting {
    grid: CylGrid,
    h: Complex64,
    axial: AxialCayley,
    radial: RadialCayley,
    core_phase: Vec<Complex64>,
    charge: f64,
    work: Vec<Complex64>,
    scratch: Vec<Complex64>,
    field_phase: Vec<Complex64>,
}

impl Splitting {
    pub fn new(grid: CylGrid, potential: &Potential, h: Complex64, charge: f64) -> Result<Self> {
        let alpha = I * h * 0.25;
        let axial = AxialCayley::new(&AxialStencil::new(&grid), alpha)?;
        let radial = RadialCayley::new(&RadialStencil::new(&grid), alpha)?;
        let core_phase = potential
            .evaluate(&grid)
            .into_iter()
            .map(|v| (-I * h * v).exp())
            .collect();
        Ok(Splitting {
            grid,
            h,
            axial,
            radial,
            core_phase,
            charge,
            work: vec![Complex64::new(0.0, 0.0); grid.len()],
            scratch: vec![Complex64::new(0.0, 0.0); grid.n_rho],
            field_phase: vec![Complex64::new(1.0, 0.0); grid.n_z],
        })
    }

    pub fn h(&self) -> Complex64 {
        self.h
    }

    /// Advances `psi` by `h` with the dipole field held at `field`.
    pub fn apply(&mut self, psi: &mut [Complex64], field: f64) {
        let width = self.grid.n_rho;
        self.axial.apply(psi, &mut self.work, width);
        self.radial.apply(psi, &mut self.scratch);
        let qe = self.charge * field;
        for (k, f) in self.field_phase.iter_mut().enumerate() {
            *f = if qe == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                (-I * self.h * (qe * self.grid.z(k))).exp()
            };
        }
        for (k, row) in psi.chunks_mut(width).enumerate() {
            let fp = self.field_phase[k];
            let cp = &self.core_phase[k * width..(k + 1) * width];
            for (c, p) in row.iter_mut().zip(cp) {
                *c *= p * fp;
            }
        }
        self.radial.apply(psi, &mut self.scratch);
        self.axial.apply(psi, &mut self.work, width);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Absorber {
    #[default]
    None,
    /// Multiplies by `cos(π/2 · d/width)^exponent` inside a rim of `width`
    /// a.u. along both `z` ends and the outer `ρ` edge, once per step.
    Mask { width: f64, exponent: f64 },
}

impl Absorber {
    /// Separable mask factors `(along z, along ρ)`, or `None` when inactive.
    fn factors(&self, grid: &CylGrid) -> Option<(Vec<f64>, Vec<f64>)> {
        let Absorber::Mask { width, exponent } = *self else {
            return None;
        };
        let profile = |depth: f64| {
            if depth <= 0.0 {
                1.0
            } else {
                (FRAC_PI_2 * (depth / width).min(1.0)).cos().max(0.0).powf(exponent)
            }
        };
        let mz = (0..grid.n_z)
            .map(|k| {
                let z = grid.z(k);
                let depth = (z - (grid.z_max - width)).max((grid.z_min + width) - z);
                profile(depth)
            })
            .collect();
        let mr = (0..grid.n_rho)
            .map(|j| profile(grid.rho(j) - (grid.rho_max - width)))
            .collect();
        Some((mz, mr))
    }

    pub fn validate(&self, grid: &CylGrid) -> Result<()> {
        if let Absorber::Mask { width, exponent } = *self {
            let half = 0.5 * (grid.z_max - grid.z_min).min(grid.rho_max);
            if !(width > 0.0 && width < half) {
                return Err(Error::InvalidInput(format!(
                    "absorber width must be in (0, {half}), got {width}"
                )));
            }
            if !(exponent > 0.0) {
                return Err(Error::InvalidInput("absorber exponent must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorConfig {
    /// Step size. Splitting errors near the Coulomb cusp grow with `dt/dz²`;
    /// keep it well below one.
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub absorber: Absorber,
    /// Steps between diagnostic samples (norm, `⟨z⟩`, outgoing probability).
    #[serde(default = "default_stride")]
    pub diagnostic_stride: usize,
}

fn default_stride() -> usize {
    10
}

impl PropagatorConfig {
    pub fn scheme_order(&self) -> u32 {
        SCHEME_ORDER
    }

    pub fn validate(&self, grid: &CylGrid, t0: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= t0) {
            return Err(Error::InvalidInput(format!("t_end {} precedes start {t0}", self.t_end)));
        }
        if self.diagnostic_stride == 0 {
            return Err(Error::InvalidInput("diagnostic_stride must be ≥ 1".into()));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("snapshot_times must be sorted".into()));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| **t < t0 || **t > self.t_end) {
            return Err(Error::InvalidInput(format!("snapshot time {t} outside [{t0}, {}]", self.t_end)));
        }
        self.absorber.validate(grid)
    }
}

/// Probability beyond `z_ref` on one side of the core (`side = ±1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutgoingProbe {
    pub side: f64,
    pub z_ref: f64,
}

impl OutgoingProbe {
    pub fn measure(&self, wf: &WavefunctionGrid) -> f64 {
        let (side, z_ref) = (self.side, self.z_ref);
        wf.z_moment(|z| if side * z > z_ref { 1.0 } else { 0.0 })
    }
}

/// Time series recorded while propagating.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub time: Vec<f64>,
    pub norm: Vec<f64>,
    pub z_mean: Vec<f64>,
    pub outgoing: Vec<f64>,
}

impl Diagnostics {
    fn record(&mut self, wf: &WavefunctionGrid, probe: Option<&OutgoingProbe>) -> Result<()> {
        let n = wf.norm();
        if !n.is_finite() {
            return Err(Error::Aborted { time: wf.time });
        }
        self.time.push(wf.time);
        self.norm.push(n);
        self.z_mean.push(wf.expectation_z());
        if let Some(p) = probe {
            self.outgoing.push(p.measure(wf));
        }
        Ok(())
    }
}

/// Receives snapshots as propagation passes the requested times.
pub trait SnapshotSink {
    fn store(&mut self, snapshot: WavefunctionGrid) -> Result<()>;
}

impl SnapshotSink for Vec<WavefunctionGrid> {
    fn store(&mut self, snapshot: WavefunctionGrid) -> Result<()> {
        self.push(snapshot);
        Ok(())
    }
}

/// Real-time stepper bound to one pulse, potential and time step.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub pulse: LaserPulse,
    dt: f64,
    split: Splitting,
    mask: Option<(Vec<f64>, Vec<f64>)>,
}

impl Propagator {
    /// `dt` may be negative to run backwards in time.
    pub fn new(
        grid: CylGrid,
        potential: &Potential,
        pulse: LaserPulse,
        dt: f64,
        absorber: Absorber,
    ) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be finite and non-zero, got {dt}")));
        }
        absorber.validate(&grid)?;
        let split = Splitting::new(grid, potential, Complex64::new(dt, 0.0), pulse.consts.q_e)?;
        Ok(Propagator {
            pulse,
            dt,
            split,
            mask: absorber.factors(&grid),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `wf` from `wf.time` to `wf.time + dt` (field at the midpoint).
    pub fn step(&mut self, wf: &mut WavefunctionGrid) {
        let field = self.pulse.electric_field(wf.time + 0.5 * self.dt);
        self.split.apply(&mut wf.psi, field);
        if let Some((mz, mr)) = &self.mask {
            let width = mr.len();
            for (row, fz) in wf.psi.chunks_mut(width).zip(mz) {
                for (c, fr) in row.iter_mut().zip(mr) {
                    *c *= fz * fr;
                }
            }
        }
        wf.time += self.dt;
    }
}

/// Single step from `t` with a freshly built propagator (no absorber).
pub fn step(
    wf: &WavefunctionGrid,
    t: f64,
    dt: f64,
    pulse: &LaserPulse,
    potential: &Potential,
) -> Result<WavefunctionGrid> {
    if !wf.is_finite() {
        return Err(Error::Aborted { time: t });
    }
    let mut p = Propagator::new(wf.grid, potential, *pulse, dt, Absorber::None)?;
    let mut out = wf.clone();
    out.time = t;
    p.step(&mut out);
    Ok(out)
}

/// Full propagation record: inputs, stored snapshots and diagnostics.
#[derive(Debug, Clone)]
pub struct PropagationRun {
    pub initial: WavefunctionGrid,
    pub pulse: LaserPulse,
    pub potential: Potential,
    pub config: PropagatorConfig,
    pub snapshots: Vec<WavefunctionGrid>,
    pub diagnostics: Diagnostics,
}

impl PropagationRun {
    pub fn new(initial: WavefunctionGrid, pulse: LaserPulse, potential: Potential, config: PropagatorConfig) -> Self {
        PropagationRun {
            initial,
            pulse,
            potential,
            config,
            snapshots: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    /// Snapshot nearest to `t`.
    pub fn snapshot_near(&self, t: f64) -> Option<&WavefunctionGrid> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

/// Propagates `run.initial` to `config.t_end`, keeping snapshots in memory.
pub fn propagate(mut run: PropagationRun) -> Result<PropagationRun> {
    let mut snaps = Vec::new();
    run.diagnostics = propagate_into(&run.initial, &run.pulse, &run.potential, &run.config, &mut snaps, None)?;
    run.snapshots = snaps;
    Ok(run)
}

/// Propagation loop with an arbitrary snapshot sink and optional outgoing probe.
///
/// Snapshot `t_s` is taken at step `round((t_s − t0)/dt)`, so its stored
/// time is within `dt/2` of the request.
pub fn propagate_into(
    initial: &WavefunctionGrid,
    pulse: &LaserPulse,
    potential: &Potential,
    config: &PropagatorConfig,
    sink: &mut dyn SnapshotSink,
    probe: Option<&OutgoingProbe>,
) -> Result<Diagnostics> {
    let t0 = initial.time;
    config.validate(&initial.grid, t0)?;
    if !initial.is_finite() {
        return Err(Error::Aborted { time: t0 });
    }
    let mut prop = Propagator::new(initial.grid, potential, *pulse, config.dt, config.absorber)?;
    let n_steps = ((config.t_end - t0) / config.dt).round() as usize;
    let mut pending: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|t| ((t - t0) / config.dt).round() as usize)
        .collect();
    pending.dedup();
    let mut pending = pending.into_iter().peekable();

    let mut wf = initial.clone();
    let mut diag = Diagnostics::default();
    diag.record(&wf, probe)?;
    for n in 0..=n_steps {
        if n > 0 {
            prop.step(&mut wf);
            // keep the clock free of accumulated round-off
            wf.time = t0 + n as f64 * config.dt;
            if n % config.diagnostic_stride == 0 || n == n_steps {
                diag.record(&wf, probe)?;
            }
        }
        while pending.peek() == Some(&n) {
            pending.next();
            if !wf.is_finite() {
                return Err(Error::Aborted { time: wf.time });
            }
            sink.store(wf.clone())?;
        }
    }
    Ok(diag)
}
