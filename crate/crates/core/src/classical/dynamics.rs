use serde::{Deserialize, Serialize};

use crate::potential::Potential;
use crate::units::{FieldProfile, LaserPulse};
use crate::{Error, Result};

/// Default trajectory time step.
pub const DEFAULT_TRAJ_DT: f64 = 0.01;
/// Extra core softening `ε` for trajectories.
pub const DEFAULT_CORE_SOFTENING: f64 = 0.1;
/// Field-free continuation after the pulse for Coulomb runs.
pub const LONG_RUN_EXTRA: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub p_x: f64,
    pub p_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    SimpleMan,
    #[default]
    QmfSeeded,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::SimpleMan => "simple_man",
            Model::QmfSeeded => "qmf_seeded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    pub coulomb_force: bool,
    pub magnetic_term: bool,
    pub model: Model,
}

impl Flags {
    pub fn label(&self) -> String {
        format!(
            "{}{}{}",
            self.model.name(),
            if self.coulomb_force { "+coulomb" } else { "" },
            if self.magnetic_term { "+magnetic" } else { "" }
        )
    }
}

/// Initial conditions at the tunnel exit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub t_i: f64,
    pub exit_z: f64,
    pub p_z0: f64,
    /// Momentum along the propagation axis `x`.
    pub p_rho0: f64,
    pub flags: Flags,
}

impl TrajectorySpec {
    pub fn simple_man(t_i: f64, exit_z: f64, coulomb_force: bool, magnetic_term: bool) -> Self {
        TrajectorySpec {
            t_i,
            exit_z,
            p_z0: 0.0,
            p_rho0: 0.0,
            flags: Flags {
                coulomb_force,
                magnetic_term,
                model: Model::SimpleMan,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t_i, self.exit_z, self.p_z0, self.p_rho0].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("trajectory spec has non-finite entries".into()));
        }
        if self.flags.model == Model::SimpleMan && (self.p_z0 != 0.0 || self.p_rho0 != 0.0) {
            return Err(Error::InvalidInput("simple_man trajectories start at rest".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateOptions {
    pub dt: f64,
    /// Store every `stride`-th step (the last step is always kept).
    pub stride: usize,
    pub core_softening: f64,
    /// Largest energy change tolerated per field-free step.
    pub energy_guard: f64,
    /// Continue field-free for [`LONG_RUN_EXTRA`] when the Coulomb force is on.
    pub long_run: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt: DEFAULT_TRAJ_DT,
            stride: 10,
            core_softening: DEFAULT_CORE_SOFTENING,
            energy_guard: 1e-6,
            long_run: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub spec: TrajectorySpec,
    pub states: Vec<ClassicalState>,
    /// `(p_z, p_x)` at the end of the integration interval.
    pub final_momentum: (f64, f64),
    /// `(p_z, p_x)` after the field-free continuation, Coulomb runs only.
    pub long_run_momentum: Option<(f64, f64)>,
    /// Step actually used.
    pub dt: f64,
}

impl Trajectory {
    /// State at `t` by cubic Hermite interpolation of the position and linear momentum.
    pub fn state_at(&self, t: f64) -> Option<ClassicalState> {
        let first = self.states.first()?;
        let last = self.states.last()?;
        if t < first.t - 1e-9 || t > last.t + 1e-9 {
            return None;
        }
        let i = self.states.partition_point(|s| s.t <= t).clamp(1, self.states.len().max(2) - 1);
        if self.states.len() == 1 {
            return Some(*first);
        }
        let (a, b) = (self.states[i - 1], self.states[i]);
        let h = b.t - a.t;
        let s = ((t - a.t) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let herm = |ya: f64, va: f64, yb: f64, vb: f64| h00 * ya + h10 * h * va + h01 * yb + h11 * h * vb;
        Some(ClassicalState {
            t,
            x: herm(a.x, a.p_x, b.x, b.p_x),
            z: herm(a.z, a.p_z, b.z, b.p_z),
            p_x: a.p_x + s * (b.p_x - a.p_x),
            p_z: a.p_z + s * (b.p_z - a.p_z),
        })
    }
}

struct Forces<'a, F: FieldProfile> {
    field: &'a F,
    charge: f64,
    mass: f64,
    core_charge: f64,
    soft2: f64,
    coulomb: bool,
    magnetic: bool,
}

impl<F: FieldProfile> Forces<'_, F> {
    /// `d/dt (x, z, p_x, p_z)`.
    fn rate(&self, t: f64, y: [f64; 4]) -> [f64; 4] {
        let [x, z, px, pz] = y;
        let (vx, vz) = (px / self.mass, pz / self.mass);
        let e = self.field.electric(t);
        let b = if self.magnetic { self.field.magnetic_y(t) } else { 0.0 };
        // −q(E + v×B), v×B = (−v_z B_y, 0, v_x B_y)
        let mut fx = self.charge * vz * b;
        let mut fz = -self.charge * (e + vx * b);
        if self.coulomb {
            let r2 = x * x + z * z + self.soft2;
            let k = -self.core_charge / (r2 * r2.sqrt());
            fx += k * x;
            fz += k * z;
        }
        [vx, vz, fx, fz]
    }

    fn energy(&self, y: [f64; 4]) -> f64 {
        let [x, z, px, pz] = y;
        let kin = (px * px + pz * pz) / (2.0 * self.mass);
        if self.coulomb {
            kin - self.core_charge / (x * x + z * z + self.soft2).sqrt()
        } else {
            kin
        }
    }

    fn rk4(&self, t: f64, y: [f64; 4], h: f64) -> [f64; 4] {
        let add = |a: [f64; 4], b: [f64; 4], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]];
        let k1 = self.rate(t, y);
        let k2 = self.rate(t + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = self.rate(t + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = self.rate(t + h, add(y, k3, h));
        let mut out = y;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    fn field_free(&self, t: f64, h: f64) -> bool {
        [t, t + 0.5 * h, t + h].iter().all(|&s| self.field.electric(s) == 0.0)
    }

    /// Uniform steps from `t0` to `t1`, calling `keep` on every state.
    fn run(&self, t0: f64, t1: f64, y0: [f64; 4], dt: f64, guard: f64, mut keep: impl FnMut(usize, f64, [f64; 4])) -> Result<(f64, [f64; 4])> {
        let n = (((t1 - t0) / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let mut y = y0;
        keep(0, t0, y);
        for i in 0..n {
            let t = t0 + i as f64 * h;
            let next = self.rk4(t, y, h);
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::StepUnstable { time: t, change: f64::INFINITY });
            }
            if self.field_free(t, h) {
                let change = (self.energy(next) - self.energy(y)).abs();
                if change > guard {
                    return Err(Error::StepUnstable { time: t, change });
                }
            }
            y = next;
            keep(i + 1, t0 + (i + 1) as f64 * h, y);
        }
        Ok((h, y))
    }
}

/// RK4 trajectory from the exit to `t_end` with default options.
pub fn integrate(spec: &TrajectorySpec, pulse: &LaserPulse, potential: &Potential, t_end: f64, dt: f64) -> Result<Trajectory> {
    let opts = IntegrateOptions { dt, ..Default::default() };
    integrate_with(spec, pulse, potential, t_end, &opts)
}

/// RK4 trajectory in any field profile.
pub fn integrate_with<F: FieldProfile>(
    spec: &TrajectorySpec,
    field: &F,
    potential: &Potential,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    spec.validate()?;
    if !(opts.dt > 0.0) || opts.stride == 0 {
        return Err(Error::InvalidInput(format!("need dt > 0 and stride ≥ 1, got {} / {}", opts.dt, opts.stride)));
    }
    if !(t_end > spec.t_i) {
        return Err(Error::InvalidInput(format!("t_end {t_end} must follow t_i {}", spec.t_i)));
    }
    let consts = field.constants();
    let soft = potential.core_length().hypot(opts.core_softening);
    let forces = Forces {
        field,
        charge: consts.q_e,
        mass: consts.m_e,
        core_charge: potential.charge,
        soft2: soft * soft,
        coulomb: spec.flags.coulomb_force,
        magnetic: spec.flags.magnetic_term,
    };
    let y0 = [0.0, spec.exit_z, spec.p_rho0, spec.p_z0];
    let n_total = (((t_end - spec.t_i) / opts.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut states = Vec::with_capacity(n_total / opts.stride + 2);
    let (h, y) = forces.run(spec.t_i, t_end, y0, opts.dt, opts.energy_guard, |i, t, y| {
        if i % opts.stride == 0 || i == n_total {
            states.push(ClassicalState { t, x: y[0], z: y[1], p_x: y[2], p_z: y[3] });
        }
    })?;
    let long_run_momentum = if spec.flags.coulomb_force && opts.long_run {
        let (_, y) = forces.run(t_end, t_end + LONG_RUN_EXTRA, y, opts.dt, opts.energy_guard, |_, _, _| {})?;
        Some((y[3], y[2]))
    } else {
        None
    };
    Ok(Trajectory {
        spec: *spec,
        states,
        final_momentum: (y[3], y[2]),
        long_run_momentum,
        dt: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::Constants;

    struct Constant {
        e: f64,
    }

    impl FieldProfile for Constant {
        fn electric(&self, _: f64) -> f64 {
            self.e
        }
        fn magnetic_y(&self, _: f64) -> f64 {
            0.0
        }
        fn constants(&self) -> Constants {
            Constants::ATOMIC
        }
    }

    fn spec(t_i: f64, p_z0: f64, p_rho0: f64, coulomb: bool, magnetic: bool) -> TrajectorySpec {
        TrajectorySpec {
            t_i,
            exit_z: 8.0,
            p_z0,
            p_rho0,
            flags: Flags {
                coulomb_force: coulomb,
                magnetic_term: magnetic,
                model: Model::QmfSeeded,
            },
        }
    }

    #[test]
    fn free_motion_is_straight() {
        let pulse = LaserPulse::new(0.0, 0.057).unwrap();
        let tr = integrate(&spec(0.0, 0.2, 0.1, false, false), &pulse, &Potential::coulomb(1.0), 50.0, 0.01).unwrap();
        for s in &tr.states {
            assert!((s.p_z - 0.2).abs() < 1e-14 && (s.p_x - 0.1).abs() < 1e-14);
            assert!((s.z - 8.0 - 0.2 * s.t).abs() < 1e-10 && (s.x - 0.1 * s.t).abs() < 1e-10);
        }
        assert_eq!(tr.states.first().unwrap().t, 0.0);
        assert_eq!(tr.states.last().unwrap().t, 50.0);
    }

    #[test]
    fn constant_force_impulse() {
        let opts = IntegrateOptions::default();
        let tr = integrate_with(&spec(0.0, 0.0, 0.0, false, false), &Constant { e: 0.05 }, &Potential::coulomb(1.0), 10.0, &opts).unwrap();
        assert!((tr.final_momentum.0 + 0.5).abs() < 1e-13);
    }

    #[test]
    fn simple_man_limit() {
        let pulse = LaserPulse::new(0.095, 0.057).unwrap();
        for t_i in [145.0, 160.0, 170.0] {
            let tr = integrate(&spec(t_i, 0.07, 0.0, false, false), &pulse, &Potential::coulomb(1.0), pulse.t_end(), 0.01).unwrap();
            let expect = 0.07 - pulse.field_drift(t_i);
            assert!((tr.final_momentum.0 - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn magnetic_term_rotates_by_beta() {
        let pulse = LaserPulse::new(0.095, 0.057).unwrap();
        let c = pulse.consts.c_light;
        for (t_i, pz0, pr0) in [(145.0, 0.05, 0.02), (160.0, -0.1, 0.0), (150.0, 0.0, 0.05)] {
            let tr = integrate(&spec(t_i, pz0, pr0, false, true), &pulse, &Potential::coulomb(1.0), pulse.t_end(), 0.01).unwrap();
            let b = pulse.beta(t_i);
            let pz = pz0 * b.cos() - (c - pr0) * b.sin();
            let u = (c - pr0) * b.cos() + pz0 * b.sin();
            let (fz, fx) = tr.final_momentum;
            assert!(((fz - pz) / pz).abs() < 1e-6, "{fz} vs {pz}");
            assert!(((c - fx - u) / u).abs() < 1e-6);
        }
    }

    #[test]
    fn rk4_self_convergence() {
        let pulse = LaserPulse::new(0.095, 0.057).unwrap();
        let s = spec(150.0, 0.1, 0.05, true, true);
        let opts = |dt| IntegrateOptions { dt, long_run: false, ..Default::default() };
        let run = |dt| integrate_with(&s, &pulse, &Potential::coulomb(1.0), pulse.t_end(), &opts(dt)).unwrap().final_momentum.0;
        let (a, b, c) = (run(0.4), run(0.2), run(0.1));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn field_free_energy_conserved() {
        let pulse = LaserPulse::new(0.0, 0.057).unwrap();
        let opts = IntegrateOptions { stride: 1, long_run: false, ..Default::default() };
        let pot = Potential::coulomb(1.0);
        let tr = integrate_with(&spec(0.0, 0.0, 0.4, true, false), &pulse, &pot, 1000.0, &opts).unwrap();
        let soft2 = DEFAULT_CORE_SOFTENING.powi(2);
        let energy = |s: &ClassicalState| 0.5 * (s.p_x * s.p_x + s.p_z * s.p_z) - 1.0 / (s.x * s.x + s.z * s.z + soft2).sqrt();
        let e0 = energy(&tr.states[0]);
        let drift = tr.states.iter().map(|s| ((energy(s) - e0) / e0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-8, "{drift:e}");
    }

    #[test]
    fn hermite_state_matches_nodes() {
        let pulse = LaserPulse::new(0.095, 0.057).unwrap();
        let tr = integrate(&spec(150.0, 0.0, 0.0, false, false), &pulse, &Potential::coulomb(1.0), 170.0, 0.01).unwrap();
        let node = tr.states[7];
        assert_eq!(tr.state_at(node.t).unwrap().z, node.z);
        let mid = tr.state_at(0.5 * (tr.states[7].t + tr.states[8].t)).unwrap();
        assert!(mid.z > node.z.min(tr.states[8].z) - 1e-9 && mid.z < node.z.max(tr.states[8].z) + 1e-9);
        assert!(tr.state_at(171.0).is_none());
    }

    #[test]
    fn simple_man_must_start_at_rest() {
        let mut s = TrajectorySpec::simple_man(145.0, 9.0, false, false);
        assert!(s.validate().is_ok());
        s.p_z0 = 0.1;
        assert!(s.validate().is_err());
    }
}
