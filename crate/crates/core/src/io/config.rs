use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atomic::RelaxConfig;
use crate::classical::{Flags, IntegrateOptions, Model, TransverseModel};
use crate::phase_space::{LagSampling, ReductionMode, ZWindow, DEFAULT_MEMORY_BUDGET, DEFAULT_P0_FLOOR};
use crate::reconstruction::{Closure, PriorModel};
use crate::tdse::{Absorber, PropagatorConfig};
use crate::{ConfigIssue, CylGrid, Error, LaserPulse, Potential, PotentialKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub e0: f64,
    pub omega: f64,
    #[serde(default)]
    pub t_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSpaceConfig {
    pub lag_sampling: LagSampling,
    pub reduction_mode: ReductionMode,
    /// Rows of the map; empty means the whole grid.
    pub windows: Vec<ZWindow>,
    /// Tile width and fractional overlap for grid lag sampling.
    pub tile_width: f64,
    pub tile_overlap: f64,
    /// Largest lag index for grid lag sampling; `None` covers half the box.
    pub max_lag: Option<usize>,
    /// Highest moment order kept (at least 1).
    pub n_moments: usize,
    pub p0_floor: f64,
    pub memory_budget: u64,
}

impl Default for PhaseSpaceConfig {
    fn default() -> Self {
        PhaseSpaceConfig {
            lag_sampling: LagSampling::HalfStep,
            reduction_mode: ReductionMode::DensityMatrix,
            windows: Vec::new(),
            tile_width: 40.0,
            tile_overlap: 0.25,
            max_lag: None,
            n_moments: 2,
            p0_floor: DEFAULT_P0_FLOOR,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Exit time `t_i` shared by all families.
    pub exit_time: f64,
    /// Snapshot times at which trajectories are compared with the QMF.
    pub compare_times: Vec<f64>,
    pub transverse_model: TransverseModel,
    pub families: Vec<Flags>,
    pub integrate: IntegrateOptions,
    /// End of integration; `None` stops at the pulse end.
    pub t_end: Option<f64>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        let mut families = Vec::new();
        for magnetic_term in [false, true] {
            for (model, coulomb_force) in [
                (Model::SimpleMan, false),
                (Model::QmfSeeded, false),
                (Model::QmfSeeded, true),
            ] {
                families.push(Flags {
                    coulomb_force,
                    magnetic_term,
                    model,
                });
            }
        }
        TrajectoryConfig {
            exit_time: 145.0,
            compare_times: vec![150.0, 160.0, 170.0],
            transverse_model: TransverseModel::Zero,
            families,
            integrate: IntegrateOptions::default(),
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    /// Exit-time search window; `None` is the half cycle around the peak.
    pub window: Option<[f64; 2]>,
    pub prior_model: PriorModel,
    /// `None` picks the closure matching `magnetic_term`.
    pub closure: Option<Closure>,
    pub magnetic_term: bool,
    pub coulomb_force: bool,
    /// Round-trip grid: points per axis and the axis ranges.
    pub grid_points: usize,
    pub t_i_range: Option<[f64; 2]>,
    pub p_z0_range: [f64; 2],
    pub p_rho0_range: [f64; 2],
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            window: None,
            prior_model: PriorModel::QmfTable,
            closure: None,
            magnetic_term: true,
            coulomb_force: false,
            grid_points: 5,
            t_i_range: None,
            p_z0_range: [-0.1, 0.1],
            p_rho0_range: [0.0, 0.05],
        }
    }
}

impl ReconstructionConfig {
    pub fn window(&self, pulse: &LaserPulse) -> (f64, f64) {
        match self.window {
            Some([a, b]) => (a, b),
            None => pulse.peak_half_cycle(),
        }
    }

    pub fn t_i_range(&self, pulse: &LaserPulse) -> (f64, f64) {
        match self.t_i_range {
            Some([a, b]) => (a, b),
            None => {
                let t_peak = pulse.t_peak();
                ((t_peak - 25.0).max(pulse.peak_half_cycle().0), t_peak)
            }
        }
    }

    pub fn closure(&self) -> Closure {
        self.closure.unwrap_or(Closure::for_magnetic(self.magnetic_term))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnsetConfig {
    /// Outgoing probability must exceed this multiple of its initial value.
    pub factor: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        OnsetConfig { factor: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    /// Significant digits in text tables.
    pub precision: usize,
    /// Bytes of snapshots kept in memory; later ones are read back from disk.
    pub snapshot_memory: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            precision: 17,
            snapshot_memory: 1 << 30,
        }
    }
}

/// Everything one run needs, loaded from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pulse: PulseConfig,
    pub potential: Potential,
    pub grid: CylGrid,
    #[serde(default)]
    pub ground_state: RelaxConfig,
    pub propagation: PropagatorConfig,
    #[serde(default)]
    pub phase_space: PhaseSpaceConfig,
    #[serde(default)]
    pub trajectories: TrajectoryConfig,
    #[serde(default)]
    pub reconstruction: ReconstructionConfig,
    #[serde(default)]
    pub onset: OnsetConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Hydrogen in an 800 nm, 0.095 a.u. pulse on an 801 × 200 grid.
    pub fn desk() -> Self {
        let pulse = PulseConfig {
            e0: 0.095,
            omega: 0.057,
            t_start: 0.0,
        };
        let t_peak = 3.0 * std::f64::consts::PI / pulse.omega;
        RunConfig {
            pulse,
            potential: Potential::coulomb(1.0),
            grid: CylGrid {
                z_min: -80.0,
                z_max: 80.0,
                n_z: 801,
                rho_max: 40.0,
                n_rho: 200,
            },
            ground_state: RelaxConfig {
                filter_span: 40.0,
                ..RelaxConfig::default()
            },
            propagation: PropagatorConfig {
                dt: 0.0125,
                t_end: 175.0,
                snapshot_times: vec![145.0, 150.0, 160.0, t_peak, 170.0],
                absorber: Absorber::Mask {
                    width: 15.0,
                    exponent: 0.125,
                },
                diagnostic_stride: 80,
            },
            phase_space: PhaseSpaceConfig::default(),
            trajectories: TrajectoryConfig::default(),
            reconstruction: ReconstructionConfig::default(),
            onset: OnsetConfig::default(),
            output: OutputConfig {
                directory: "out/desk".into(),
                ..OutputConfig::default()
            },
        }
    }

    /// Reads and validates a TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            Error::Config(vec![ConfigIssue {
                path: "<toml>".into(),
                reason: e.message().trim().to_string(),
            }])
        })?;
        let issues = cfg.issues();
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(issues))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn pulse(&self) -> Result<LaserPulse> {
        LaserPulse::with_start(self.pulse.e0, self.pulse.omega, self.pulse.t_start)
    }

    /// Every violated constraint, addressed by key path.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut bad = |path: &str, reason: String| {
            out.push(ConfigIssue {
                path: path.into(),
                reason,
            })
        };
        let p = &self.pulse;
        if !(p.e0 >= 0.0 && p.e0.is_finite()) {
            bad("pulse.e0", format!("must be ≥ 0, got {}", p.e0));
        }
        if !(p.omega > 0.0 && p.omega.is_finite()) {
            bad("pulse.omega", format!("must be > 0, got {}", p.omega));
        }
        if !p.t_start.is_finite() {
            bad("pulse.t_start", "must be finite".into());
        }
        let pulse_span = (p.omega > 0.0).then(|| (p.t_start, p.t_start + 6.0 * std::f64::consts::PI / p.omega));

        let v = &self.potential;
        if !(v.charge > 0.0 && v.charge.is_finite()) {
            bad("potential.charge", format!("must be > 0, got {}", v.charge));
        }
        if v.kind == PotentialKind::SoftCore && !(v.softening > 0.0) {
            bad("potential.softening", "must be > 0 for soft_core".into());
        }

        let grid_problems = self.grid.problems();
        for prob in &grid_problems {
            let (key, reason) = prob.split_once(": ").unwrap_or(("", prob));
            bad(&format!("grid.{key}"), reason.to_string());
        }
        let grid_ok = grid_problems.is_empty();

        let g = &self.ground_state;
        if !(g.dt_imag > 0.0) {
            bad("ground_state.dt_imag", "must be > 0".into());
        }
        if !(g.tol > 0.0) {
            bad("ground_state.tol", "must be > 0".into());
        }
        if g.max_iter == 0 {
            bad("ground_state.max_iter", "must be ≥ 1".into());
        }
        if !(g.seed_width > 0.0) {
            bad("ground_state.seed_width", "must be > 0".into());
        }

        let pr = &self.propagation;
        let t0 = p.t_start;
        if !(pr.dt > 0.0 && pr.dt.is_finite()) {
            bad("propagation.dt", format!("must be > 0, got {}", pr.dt));
        }
        if !(pr.t_end >= t0) {
            bad("propagation.t_end", format!("must be ≥ pulse.t_start = {t0}"));
        }
        if pr.diagnostic_stride == 0 {
            bad("propagation.diagnostic_stride", "must be ≥ 1".into());
        }
        if pr.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
            bad("propagation.snapshot_times", "must be strictly increasing".into());
        }
        if let Some(t) = pr.snapshot_times.iter().find(|t| !(**t >= t0 && **t <= pr.t_end)) {
            bad("propagation.snapshot_times", format!("{t} outside [{t0}, {}]", pr.t_end));
        }
        if let Absorber::Mask { width, exponent } = pr.absorber {
            let half = 0.5 * (self.grid.z_max - self.grid.z_min).min(self.grid.rho_max);
            if !(width > 0.0 && (!grid_ok || width < half)) {
                bad("propagation.absorber.width", format!("must be in (0, {half})"));
            }
            if !(exponent > 0.0) {
                bad("propagation.absorber.exponent", "must be > 0".into());
            }
        }

        let ps = &self.phase_space;
        if !(ps.p0_floor > 0.0) {
            bad("phase_space.p0_floor", "must be > 0".into());
        }
        if ps.n_moments == 0 {
            bad("phase_space.n_moments", "must be ≥ 1".into());
        }
        if !(ps.tile_width > 0.0) {
            bad("phase_space.tile_width", "must be > 0".into());
        }
        if !(ps.tile_overlap >= 0.0 && ps.tile_overlap < 1.0) {
            bad("phase_space.tile_overlap", "must be in [0, 1)".into());
        }
        if ps.max_lag == Some(0) {
            bad("phase_space.max_lag", "must be ≥ 1".into());
        }
        if ps.memory_budget == 0 {
            bad("phase_space.memory_budget", "must be > 0".into());
        }
        for (i, w) in ps.windows.iter().enumerate() {
            if !(w.z_lo < w.z_hi) || (grid_ok && (w.z_lo < self.grid.z_min || w.z_hi > self.grid.z_max)) {
                bad(
                    &format!("phase_space.windows[{i}]"),
                    format!("[{}, {}] must be a non-empty range inside the grid", w.z_lo, w.z_hi),
                );
            }
        }

        let tr = &self.trajectories;
        if let Some((lo, hi)) = pulse_span {
            if !(tr.exit_time > lo && tr.exit_time < hi) {
                bad("trajectories.exit_time", format!("must lie inside the pulse ({lo}, {hi})"));
            }
        }
        if tr.compare_times.windows(2).any(|w| w[1] <= w[0]) {
            bad("trajectories.compare_times", "must be strictly increasing".into());
        }
        let half_dt = 0.5 * pr.dt.abs() + 1e-9;
        let has_snapshot = |t: f64| pr.snapshot_times.iter().any(|s| (s - t).abs() <= half_dt);
        if !has_snapshot(tr.exit_time) {
            bad("trajectories.exit_time", "needs a matching propagation.snapshot_times entry".into());
        }
        for t in &tr.compare_times {
            if *t <= tr.exit_time {
                bad("trajectories.compare_times", format!("{t} is not after exit_time"));
            } else if !has_snapshot(*t) {
                bad("trajectories.compare_times", format!("{t} has no matching snapshot"));
            }
        }
        let opts = &tr.integrate;
        if !(opts.dt > 0.0) {
            bad("trajectories.integrate.dt", "must be > 0".into());
        }
        if opts.stride == 0 {
            bad("trajectories.integrate.stride", "must be ≥ 1".into());
        }
        if !(opts.core_softening >= 0.0) {
            bad("trajectories.integrate.core_softening", "must be ≥ 0".into());
        }
        if !(opts.energy_guard > 0.0) {
            bad("trajectories.integrate.energy_guard", "must be > 0".into());
        }
        if let Some(t) = tr.t_end {
            if !(t > tr.exit_time) {
                bad("trajectories.t_end", "must be after exit_time".into());
            }
        }

        let rc = &self.reconstruction;
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if let (Some([a, b]), Some((lo, hi))) = (rc.window, pulse_span) {
            if !(a < b && a >= lo && b <= hi) {
                bad("reconstruction.window", format!("must be an ordered range inside [{lo}, {hi}]"));
            }
        }
        if let (Some(r), Some((lo, hi))) = (rc.t_i_range, pulse_span) {
            if !(range_ok(r) && r[0] > lo && r[1] < hi) {
                bad("reconstruction.t_i_range", format!("must be an ordered range inside ({lo}, {hi})"));
            }
        }
        if let Some(span) = pulse_span {
            let hc = 0.5 * std::f64::consts::PI / p.omega;
            let t_peak = 0.5 * (span.0 + span.1);
            let (w_lo, w_hi) = match rc.window {
                Some([a, b]) => (a, b),
                None => (t_peak - hc, t_peak + hc),
            };
            let (t_lo, t_hi) = match rc.t_i_range {
                Some([a, b]) => (a, b),
                None => ((t_peak - 25.0).max(t_peak - hc), t_peak),
            };
            if t_lo < w_lo || t_hi > w_hi {
                bad(
                    "reconstruction.t_i_range",
                    format!("[{t_lo}, {t_hi}] must lie inside the search window [{w_lo}, {w_hi}]"),
                );
            }
        }
        if rc.grid_points == 0 {
            bad("reconstruction.grid_points", "must be ≥ 1".into());
        }
        if !range_ok(rc.p_z0_range) {
            bad("reconstruction.p_z0_range", "must be ordered and finite".into());
        }
        if !(range_ok(rc.p_rho0_range) && rc.p_rho0_range[0] >= 0.0) {
            bad("reconstruction.p_rho0_range", "must be ordered, finite and ≥ 0".into());
        }

        if !(self.onset.factor > 1.0) {
            bad("onset.factor", "must be > 1".into());
        }
        if !(1..=17).contains(&self.output.precision) {
            bad("output.precision", "must be in 1..=17".into());
        }
        if self.output.directory.is_empty() {
            bad("output.directory", "must not be empty".into());
        }
        out
    }
}
