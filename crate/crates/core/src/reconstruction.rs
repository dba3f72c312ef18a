//! Detector-to-exit reconstruction.
//!
//! The final momenta `(p_z^d, p_ρ^d)` are rotated back by `β(t_i)`:
//!
//! ```text
//! p_z⁰ = p_z^d cos β + (c − p_ρ^d) sin β
//! p_ρ⁰ = c − (c − p_ρ^d) cos β + p_z^d sin β
//! ```
//!
//! The exit time itself is not fixed by these two equations. It is taken
//! from a closure with a prior for `p_z⁰(t_i)`: either the drift relation
//! `p_z^d = p_z⁰(t_i) − q F(t_i)` or the first rotation equation itself.
//! Both closures are choices of this crate.

use serde::{Deserialize, Serialize};

use crate::classical::{integrate_with, IntegrateOptions, TrajectorySpec};
use crate::potential::Potential;
use crate::units::LaserPulse;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorMomentum {
    pub p_z_d: f64,
    /// Along the propagation axis.
    pub p_rho_d: f64,
}

impl DetectorMomentum {
    pub fn new(p_z_d: f64, p_rho_d: f64) -> Result<Self> {
        if !(p_z_d.is_finite() && p_rho_d.is_finite()) {
            return Err(Error::InvalidInput("detector momentum must be finite".into()));
        }
        Ok(DetectorMomentum { p_z_d, p_rho_d })
    }

    /// True above `0.1 c`, where the nonrelativistic map is questionable.
    pub fn relativistic(&self, c: f64) -> bool {
        self.p_z_d.hypot(self.p_rho_d) > 0.1 * c
    }
}

/// The rotation with an explicit angle.
pub fn rotate_back(det: DetectorMomentum, beta: f64, c: f64) -> (f64, f64) {
    let (s, co) = beta.sin_cos();
    let u = c - det.p_rho_d;
    (det.p_z_d * co + u * s, c - u * co + det.p_z_d * s)
}

/// `(p_z⁰, p_ρ⁰)` from detector momenta for exit time `t_i`.
pub fn exit_momentum(det: DetectorMomentum, t_i: f64, pulse: &LaserPulse) -> (f64, f64) {
    rotate_back(det, pulse.beta(t_i), pulse.consts.c_light)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorModel {
    #[default]
    ZeroExit,
    QmfTable,
}

/// Equation solved for `t_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// `p_z^d = p_z⁰(t_i) − q F(t_i)`, exact without the magnetic term.
    #[default]
    Drift,
    /// `p_z⁰(t_i) = p_z^d cos β + (c − p_ρ^d) sin β`, exact with it.
    Rotation,
}

impl Closure {
    /// The closure that inverts a forward model exactly.
    pub fn for_magnetic(magnetic_term: bool) -> Self {
        if magnetic_term {
            Closure::Rotation
        } else {
            Closure::Drift
        }
    }
}

/// Exit momentum `p_z⁰` assumed as a function of exit time.
#[derive(Debug, Clone, PartialEq)]
pub enum ExitPrior {
    Zero,
    /// Linear interpolation, held constant outside the table.
    Table { t: Vec<f64>, p_z0: Vec<f64> },
}

impl ExitPrior {
    pub fn constant(p_z0: f64) -> Self {
        ExitPrior::Table {
            t: vec![0.0],
            p_z0: vec![p_z0],
        }
    }

    pub fn table(t: Vec<f64>, p_z0: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != p_z0.len() || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("prior table needs ascending, matching columns".into()));
        }
        if p_z0.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("prior table has non-finite entries".into()));
        }
        Ok(ExitPrior::Table { t, p_z0 })
    }

    pub fn model(&self) -> PriorModel {
        match self {
            ExitPrior::Zero => PriorModel::ZeroExit,
            ExitPrior::Table { .. } => PriorModel::QmfTable,
        }
    }

    pub fn at(&self, t_i: f64) -> f64 {
        match self {
            ExitPrior::Zero => 0.0,
            ExitPrior::Table { t, p_z0 } => {
                let i = t.partition_point(|&x| x <= t_i);
                if i == 0 {
                    p_z0[0]
                } else if i == t.len() {
                    p_z0[t.len() - 1]
                } else {
                    let s = (t_i - t[i - 1]) / (t[i] - t[i - 1]);
                    p_z0[i - 1] + s * (p_z0[i] - p_z0[i - 1])
                }
            }
        }
    }
}

/// Roots of the drift relation inside the search window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitTimeEstimate {
    pub roots: Vec<f64>,
    /// Index of the root nearest the field peak.
    pub primary: usize,
    pub window: (f64, f64),
}

impl ExitTimeEstimate {
    pub fn t_i(&self) -> f64 {
        self.roots[self.primary]
    }

    pub fn multiple(&self) -> bool {
        self.roots.len() > 1
    }
}

/// Number of scan intervals used to bracket roots.
const SCAN: usize = 512;

/// Solves `p_z^d = p_z⁰(t_i) − q F(t_i)` for `t_i` in `window`.
pub fn estimate_exit_time(det: DetectorMomentum, pulse: &LaserPulse, prior: &ExitPrior, window: (f64, f64)) -> Result<ExitTimeEstimate> {
    estimate_exit_time_with(det, pulse, prior, window, Closure::Drift)
}

/// All roots of `closure` in `window`, the one nearest the field peak marked primary.
pub fn estimate_exit_time_with(
    det: DetectorMomentum,
    pulse: &LaserPulse,
    prior: &ExitPrior,
    window: (f64, f64),
    closure: Closure,
) -> Result<ExitTimeEstimate> {
    let (lo, hi) = window;
    let eps = 1e-9 * pulse.duration();
    if !(lo < hi) || lo < pulse.t_start - eps || hi > pulse.t_end() + eps {
        return Err(Error::InvalidInput(format!(
            "window [{lo}, {hi}] not inside pulse [{}, {}]",
            pulse.t_start,
            pulse.t_end()
        )));
    }
    let q = pulse.consts.q_e;
    let f = |t: f64| match closure {
        Closure::Drift => prior.at(t) - q * pulse.field_drift(t) - det.p_z_d,
        Closure::Rotation => prior.at(t) - exit_momentum(det, t, pulse).0,
    };
    let ts: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let fs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut roots = Vec::new();
    for i in 0..SCAN {
        if fs[i] == 0.0 {
            roots.push(ts[i]);
        } else if fs[i] * fs[i + 1] < 0.0 {
            roots.push(refine(&f, ts[i], ts[i + 1], fs[i]));
        }
    }
    if fs[SCAN] == 0.0 {
        roots.push(ts[SCAN]);
    }
    if roots.is_empty() {
        return Err(Error::NoRoot {
            p_z_d: det.p_z_d,
            t_lo: lo,
            t_hi: hi,
        });
    }
    let peak = pulse.t_peak();
    let primary = (0..roots.len())
        .min_by(|&a, &b| (roots[a] - peak).abs().total_cmp(&(roots[b] - peak).abs()))
        .unwrap_or(0);
    Ok(ExitTimeEstimate { roots, primary, window })
}

/// Bisection down to `1e-6`, then bracket-guarded secant steps to `1e-12`.
fn refine(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > 1e-6 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut fb = f(b);
    for _ in 0..60 {
        if b - a <= 1e-12 || fb == fa {
            break;
        }
        let mut x = b - fb * (b - a) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx > 0.0) == (fa > 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        let shrink = (b - a).min((x - a).abs().max((b - x).abs()));
        if shrink <= 1e-12 {
            break;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Error of one reconstructed quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorValue {
    pub value: f64,
    /// The truth was zero, so `value` is an absolute error.
    pub absolute: bool,
}

impl ErrorValue {
    pub fn of(rec: f64, truth: f64) -> Self {
        if truth == 0.0 {
            ErrorValue {
                value: rec.abs(),
                absolute: true,
            }
        } else {
            ErrorValue {
                value: ((rec - truth) / truth).abs(),
                absolute: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripErrors {
    pub t_i: ErrorValue,
    pub p_z0: ErrorValue,
    pub p_rho0: ErrorValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionRecord {
    pub detector: DetectorMomentum,
    pub t_i_est: f64,
    pub p_z0_rec: f64,
    pub p_rho0_rec: f64,
    pub n_roots: usize,
    pub truth: Option<TrajectorySpec>,
    pub errors: Option<RoundTripErrors>,
}

/// Reconstruction from detector momenta alone.
pub fn reconstruct(
    det: DetectorMomentum,
    pulse: &LaserPulse,
    prior: &ExitPrior,
    window: (f64, f64),
    closure: Closure,
) -> Result<ReconstructionRecord> {
    let est = estimate_exit_time_with(det, pulse, prior, window, closure)?;
    let t_i = est.t_i();
    let (p_z0_rec, p_rho0_rec) = exit_momentum(det, t_i, pulse);
    Ok(ReconstructionRecord {
        detector: det,
        t_i_est: t_i,
        p_z0_rec,
        p_rho0_rec,
        n_roots: est.roots.len(),
        truth: None,
        errors: None,
    })
}

/// Integrates `spec` to the pulse end, reconstructs from the final momenta and compares.
///
/// The closure follows the magnetic flag of `spec`.
pub fn validate_roundtrip(
    spec: &TrajectorySpec,
    pulse: &LaserPulse,
    potential: &Potential,
    prior: &ExitPrior,
    window: (f64, f64),
    opts: &IntegrateOptions,
) -> Result<ReconstructionRecord> {
    let closure = Closure::for_magnetic(spec.flags.magnetic_term);
    validate_roundtrip_with(spec, pulse, potential, prior, window, opts, closure)
}

/// [`validate_roundtrip`] with an explicit closure.
pub fn validate_roundtrip_with(
    spec: &TrajectorySpec,
    pulse: &LaserPulse,
    potential: &Potential,
    prior: &ExitPrior,
    window: (f64, f64),
    opts: &IntegrateOptions,
    closure: Closure,
) -> Result<ReconstructionRecord> {
    let traj = integrate_with(spec, pulse, potential, pulse.t_end(), opts)?;
    let (p_z_d, p_rho_d) = traj.final_momentum;
    let mut rec = reconstruct(DetectorMomentum::new(p_z_d, p_rho_d)?, pulse, prior, window, closure)?;
    rec.errors = Some(RoundTripErrors {
        t_i: ErrorValue::of(rec.t_i_est, spec.t_i),
        p_z0: ErrorValue::of(rec.p_z0_rec, spec.p_z0),
        p_rho0: ErrorValue::of(rec.p_rho0_rec, spec.p_rho0),
    });
    rec.truth = Some(*spec);
    Ok(rec)
}

/// `n` evenly spaced values over `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}
