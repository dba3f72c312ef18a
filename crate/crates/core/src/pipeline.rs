//! Stage runner behind the `strongfield` binary.
//!
//! Stages run in a fixed order: ground state, propagation, Wigner maps, QMF
//! profiles, trajectories and reconstruction. A command runs its own stage and
//! everything upstream of it, unless an upstream manifest supplies the inputs;
//! then only its own products are written.

use std::borrow::Cow;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::atomic::{relax, stationary_filter};
use crate::classical::{
    compare_to_qmf, exit_point, integrate_with, mean_delta_p, seed_from_qmf, Flags, IntegrateOptions, Model, QmfDeviation,
    Trajectory, TrajectorySpec,
};
use crate::io::{
    error_kind, read_array_checked, ArrayProduct, Cell, Manifest, OutputDir, ProductKind, RunConfig, Table,
};
use crate::phase_space::{
    moments, qmf_from_current, tile_windows, tunnel_region, wigner_spectral, wigner_tiled, LagSampling, MomentProfiles,
    PhaseSpaceMap, ZWindow,
};
use crate::reconstruction::{
    linspace, reconstruct, validate_roundtrip_with, DetectorMomentum, ExitPrior, PriorModel, ReconstructionRecord,
};
use crate::tdse::{propagate_into, Diagnostics, OutgoingProbe, SnapshotSink};
use crate::{Error, LaserPulse, Result, WavefunctionGrid};

pub const GROUND_STATE: &str = "ground_state";
pub const PROPAGATE: &str = "propagate";
pub const WIGNER: &str = "wigner";
pub const QMF: &str = "qmf";
pub const TRAJECTORIES: &str = "trajectories";
pub const RECONSTRUCT: &str = "reconstruct";
const NO_FIELD: &str = "no field";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    GroundState,
    Propagate,
    Wigner,
    Qmf,
    Trajectories,
    Reconstruct,
    Pipeline,
}

impl Command {
    pub fn stage(&self) -> &'static str {
        match self {
            Command::GroundState => GROUND_STATE,
            Command::Propagate => PROPAGATE,
            Command::Wigner => WIGNER,
            Command::Qmf => QMF,
            Command::Trajectories => TRAJECTORIES,
            Command::Reconstruct => RECONSTRUCT,
            Command::Pipeline => "pipeline",
        }
    }
}

/// An error tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage={} kind={}: {}", self.stage, error_kind(&self.error), self.error)
    }
}

impl std::error::Error for StageError {}

trait AtStage<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

/// Products of an earlier run, located through its manifest.
#[derive(Debug, Clone)]
pub struct Upstream {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Upstream {
    pub fn open(manifest_path: &Path) -> Result<Self> {
        let manifest = Manifest::load(manifest_path)?;
        let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(Upstream { dir, manifest })
    }

    pub fn ground_state(&self) -> Result<GroundStateOut> {
        let prod = self.manifest.read_array(&self.dir, "ground_state.bin")?;
        let energy = *prod
            .meta
            .attrs
            .get("energy")
            .ok_or_else(|| Error::Format("ground_state.meta lacks the energy".into()))?;
        let iterations = prod.meta.attrs.get("iterations").copied().unwrap_or(0.0) as usize;
        Ok(GroundStateOut {
            wf: prod.to_wavefunction()?,
            energy,
            iterations,
        })
    }

    pub fn snapshots(&self) -> Result<SnapshotStore> {
        let mut store = SnapshotStore::default();
        for e in self.manifest.entries(PROPAGATE, ProductKind::Array) {
            if e.path.starts_with("psi_t") {
                let prod = read_array_checked(&self.dir, &e.path, &e.sha256)?;
                let time = prod.meta.time.unwrap_or(0.0);
                store.items.push(Snapshot {
                    time,
                    held: Held::Disk {
                        dir: self.dir.clone(),
                        bin: e.path.clone(),
                        sha256: e.sha256.clone(),
                    },
                });
            }
        }
        if store.items.is_empty() {
            return Err(Error::Format("upstream manifest lists no snapshots".into()));
        }
        Ok(store)
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateOut {
    pub wf: WavefunctionGrid,
    pub energy: f64,
    pub iterations: usize,
}

impl GroundStateOut {
    pub fn ionization_potential(&self) -> f64 {
        -self.energy
    }
}

#[derive(Debug, Clone)]
enum Held {
    Memory(WavefunctionGrid),
    Disk { dir: PathBuf, bin: String, sha256: String },
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    held: Held,
}

impl Snapshot {
    pub fn load(&self) -> Result<Cow<'_, WavefunctionGrid>> {
        match &self.held {
            Held::Memory(wf) => Ok(Cow::Borrowed(wf)),
            Held::Disk { dir, bin, sha256 } => Ok(Cow::Owned(read_array_checked(dir, bin, sha256)?.to_wavefunction()?)),
        }
    }

    pub fn in_memory(&self) -> bool {
        matches!(self.held, Held::Memory(_))
    }
}

/// Snapshots kept in memory up to a byte budget, read back from disk beyond it.
#[derive(Debug, Clone, Default)]
pub struct SnapshotStore {
    pub items: Vec<Snapshot>,
}

impl SnapshotStore {
    /// Snapshot within `tol` of `t`.
    pub fn near(&self, t: f64, tol: f64) -> Option<&Snapshot> {
        self.items
            .iter()
            .filter(|s| (s.time - t).abs() <= tol)
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

/// Writes each snapshot as it arrives and keeps it in memory while within budget.
struct SpillSink<'a> {
    out: &'a mut OutputDir,
    budget: u64,
    held_bytes: u64,
    store: SnapshotStore,
}

impl SnapshotSink for SpillSink<'_> {
    fn store(&mut self, wf: WavefunctionGrid) -> Result<()> {
        let name = snapshot_name(wf.time);
        let bin = self.out.write_array(PROPAGATE, ArrayProduct::wavefunction(&name, &wf))?;
        let bytes = (wf.psi.len() * 16) as u64;
        let time = wf.time;
        let held = if self.held_bytes + bytes <= self.budget {
            self.held_bytes += bytes;
            Held::Memory(wf)
        } else {
            let sha256 = self.out.manifest().find(&bin).expect("just written").sha256.clone();
            Held::Disk {
                dir: self.out.path().to_path_buf(),
                bin,
                sha256,
            }
        };
        self.store.items.push(Snapshot { time, held });
        Ok(())
    }
}

pub fn snapshot_name(t: f64) -> String {
    format!("psi_t{t:.3}")
}

fn time_tag(t: f64) -> String {
    format!("t{t:.3}")
}

#[derive(Debug, Clone)]
pub struct PropagationOut {
    pub snapshots: SnapshotStore,
    pub diagnostics: Diagnostics,
    /// Tunnel exit at the configured exit time, if there is a barrier.
    pub exit_z: Option<f64>,
    /// Earliest snapshot whose outgoing probability exceeds the onset threshold.
    pub onset: Option<f64>,
    /// `(t, outgoing probability)` per snapshot, `t = t_start` first.
    pub outgoing: Vec<(f64, f64)>,
    pub filter_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmfCheck {
    pub time: f64,
    pub rms: f64,
    pub max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct PhaseSpaceOut {
    pub maps: Vec<PhaseSpaceMap>,
    pub profiles: Vec<MomentProfiles>,
    pub checks: Vec<QmfCheck>,
}

impl PhaseSpaceOut {
    pub fn profile_near(&self, t: f64, tol: f64) -> Option<&MomentProfiles> {
        self.profiles.iter().find(|p| (p.time - t).abs() <= tol)
    }
}

#[derive(Debug, Clone)]
pub struct FamilyRun {
    pub flags: Flags,
    pub spec: TrajectorySpec,
    /// `None` when integration failed; see `status`.
    pub trajectory: Option<Trajectory>,
    /// `ok`, or the kind of error that cut the run short.
    pub status: String,
    pub deviations: Vec<QmfDeviation>,
    /// Comparison times where the trajectory sat in the masked region.
    pub masked: Vec<f64>,
}

impl FamilyRun {
    pub fn mean_delta_p(&self) -> f64 {
        mean_delta_p(&self.deviations)
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoriesOut {
    pub exit_z: f64,
    pub runs: Vec<FamilyRun>,
}

impl TrajectoriesOut {
    pub fn family(&self, flags: Flags) -> Option<&FamilyRun> {
        self.runs.iter().find(|r| r.flags == flags)
    }
}

#[derive(Debug, Clone)]
pub struct RoundTripRow {
    pub truth: TrajectorySpec,
    pub record: std::result::Result<ReconstructionRecord, String>,
}

#[derive(Debug, Clone, Default)]
pub struct ReconstructionOut {
    pub roundtrip: Vec<RoundTripRow>,
    pub detector: Vec<std::result::Result<ReconstructionRecord, String>>,
}

/// Inputs beyond the config.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub upstream: Option<Upstream>,
    pub detector: Option<Vec<DetectorMomentum>>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub manifest: Manifest,
    pub ground_state: Option<GroundStateOut>,
    pub propagation: Option<PropagationOut>,
    pub phase_space: Option<PhaseSpaceOut>,
    pub trajectories: Option<TrajectoriesOut>,
    pub reconstruction: Option<ReconstructionOut>,
}

/// Runs every stage into `out_dir`.
pub fn run_pipeline(cfg: &RunConfig, out_dir: &Path) -> std::result::Result<Report, StageError> {
    execute(cfg, Command::Pipeline, out_dir, &Inputs::default())
}

/// Runs `cmd` into `out_dir`. The manifest is written even when a stage fails.
pub fn execute(cfg: &RunConfig, cmd: Command, out_dir: &Path, inputs: &Inputs) -> std::result::Result<Report, StageError> {
    let issues = cfg.issues();
    if !issues.is_empty() {
        return Err(Error::Config(issues)).at("config");
    }
    if let Some(up) = &inputs.upstream {
        if cmd == Command::Pipeline {
            return Err(Error::InvalidInput("the full pipeline takes no stage input".into())).at("config");
        }
        if same_dir(&up.dir, out_dir) {
            return Err(Error::InvalidInput("stage input and output directories must differ".into())).at("config");
        }
    }
    let mut out = OutputDir::create(out_dir, &cfg.digest(), cfg.output.precision).at("setup")?;
    out.write_bytes("config.toml", "config", ProductKind::Config, cfg.to_toml().as_bytes())
        .at("setup")?;
    let mut runner = Runner {
        cfg,
        pulse: cfg.pulse().at("config")?,
        out,
        report: Report::default(),
    };
    match runner.run(cmd, inputs) {
        Ok(()) => {
            let Runner { out, mut report, .. } = runner;
            report.manifest = out.finish().at("setup")?;
            Ok(report)
        }
        Err(e) => {
            runner.out.fail(e.stage, &e.error);
            let _ = runner.out.finish();
            Err(e)
        }
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    pulse: LaserPulse,
    out: OutputDir,
    report: Report,
}

impl Runner<'_> {
    fn run(&mut self, cmd: Command, inputs: &Inputs) -> std::result::Result<(), StageError> {
        let up = inputs.upstream.as_ref();
        let rank = |c: Command| cmd >= c && cmd != Command::Reconstruct;
        if cmd == Command::GroundState {
            self.ground_state().at(GROUND_STATE)?;
            return Ok(());
        }
        if cmd == Command::Reconstruct {
            let needs_profiles = inputs.detector.is_some() && self.cfg.reconstruction.prior_model == PriorModel::QmfTable;
            let needs_ip = needs_profiles || self.cfg.reconstruction.coulomb_force;
            let (gs, prop, ps) = match (needs_ip, up) {
                (false, _) => (None, None, None),
                (true, Some(up)) => {
                    let gs = up.ground_state().at(RECONSTRUCT)?;
                    let snaps = if needs_profiles { Some(up.snapshots().at(RECONSTRUCT)?) } else { None };
                    let ps = match &snaps {
                        Some(s) => Some(self.phase_space(s, false, false).at(RECONSTRUCT)?),
                        None => None,
                    };
                    (Some(gs), snaps, ps)
                }
                (true, None) => {
                    let gs = self.ground_state().at(GROUND_STATE)?;
                    if needs_profiles {
                        let prop = self.propagate(&gs).at(PROPAGATE)?;
                        let ps = self.phase_space(&prop.snapshots, true, true).at(WIGNER)?;
                        (Some(gs), Some(prop.snapshots), Some(ps))
                    } else {
                        (Some(gs), None, None)
                    }
                }
            };
            let _ = prop;
            let ip = gs.as_ref().map(|g| g.ionization_potential());
            let rec = self.reconstruct(ip, ps.as_ref(), inputs.detector.as_deref()).at(RECONSTRUCT)?;
            self.report.ground_state = gs;
            self.report.phase_space = ps;
            self.report.reconstruction = Some(rec);
            return Ok(());
        }

        let (gs, snaps) = match up {
            Some(up) => {
                let gs = up.ground_state().at(cmd.stage())?;
                let snaps = if cmd == Command::Propagate {
                    None
                } else {
                    Some(up.snapshots().at(cmd.stage())?)
                };
                (gs, snaps)
            }
            None => (self.ground_state().at(GROUND_STATE)?, None),
        };
        let snaps = match snaps {
            Some(s) => s,
            None => {
                let prop = self.propagate(&gs).at(PROPAGATE)?;
                let s = prop.snapshots.clone();
                self.report.propagation = Some(prop);
                s
            }
        };
        if cmd == Command::Propagate {
            self.report.ground_state = Some(gs);
            return Ok(());
        }
        let write_maps = cmd == Command::Wigner || (up.is_none() && rank(Command::Wigner));
        let write_moments = cmd == Command::Qmf || (up.is_none() && rank(Command::Qmf));
        let stage = if write_moments && !write_maps { QMF } else { WIGNER };
        let ps = self.phase_space(&snaps, write_maps, write_moments).at(stage)?;
        if rank(Command::Trajectories) {
            let tr = self.trajectories(gs.ionization_potential(), &snaps, &ps).at(TRAJECTORIES)?;
            self.report.trajectories = tr;
        }
        if cmd == Command::Pipeline {
            let rec = self
                .reconstruct(Some(gs.ionization_potential()), Some(&ps), inputs.detector.as_deref())
                .at(RECONSTRUCT)?;
            self.report.reconstruction = Some(rec);
        }
        self.report.ground_state = Some(gs);
        self.report.phase_space = Some(ps);
        Ok(())
    }

    fn digits(&self) -> usize {
        self.out.digits()
    }

    fn ground_state(&mut self) -> Result<GroundStateOut> {
        let cfg = self.cfg;
        let gs = relax(&cfg.potential, &cfg.grid, &cfg.ground_state)?;
        let mut prod = ArrayProduct::wavefunction("ground_state", &gs.wf);
        prod.meta.attrs.insert("energy".into(), gs.energy);
        prod.meta.attrs.insert("iterations".into(), gs.iterations as f64);
        self.out.write_array(GROUND_STATE, prod)?;
        let mut t = Table::new(&["energy", "ionization_potential", "iterations", "norm", "z_mean"]);
        t.push(vec![
            gs.energy.into(),
            gs.ionization_potential().into(),
            gs.iterations.into(),
            gs.wf.norm().into(),
            gs.wf.expectation_z().into(),
        ]);
        self.out.write_table("ground_state.tsv", GROUND_STATE, &t)?;
        let out = GroundStateOut {
            wf: gs.wf,
            energy: gs.energy,
            iterations: gs.iterations,
        };
        self.report.ground_state = Some(out.clone());
        Ok(out)
    }

    fn exit_z(&self, ip: f64) -> Result<Option<f64>> {
        if self.pulse.e0 == 0.0 {
            return Ok(None);
        }
        match exit_point(&self.cfg.potential, &self.pulse, self.cfg.trajectories.exit_time, ip) {
            Ok(z) => Ok(Some(z)),
            Err(Error::NoBarrier { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn propagate(&mut self, gs: &GroundStateOut) -> Result<PropagationOut> {
        let cfg = self.cfg;
        let pc = &cfg.propagation;
        let mut initial = gs.wf.clone();
        initial.time = cfg.pulse.t_start;
        let mut filter_loss = None;
        if cfg.ground_state.filter_span > 0.0 {
            let (wf, loss) = stationary_filter(&initial, gs.energy, &cfg.potential, pc.dt, cfg.ground_state.filter_span)?;
            initial = wf;
            filter_loss = Some(loss);
        }
        let ip = gs.ionization_potential();
        let exit_z = self.exit_z(ip)?;
        let probe = exit_z.map(|z| OutgoingProbe {
            side: z.signum(),
            z_ref: z.abs(),
        });
        let mut sink = SpillSink {
            out: &mut self.out,
            budget: cfg.output.snapshot_memory,
            held_bytes: 0,
            store: SnapshotStore::default(),
        };
        let diagnostics = propagate_into(&initial, &self.pulse, &cfg.potential, pc, &mut sink, probe.as_ref())?;
        let snapshots = sink.store;

        let mut columns = vec!["t", "field", "norm", "z_mean"];
        if probe.is_some() {
            columns.push("outgoing");
        }
        let mut t = Table::new(&columns);
        for i in 0..diagnostics.time.len() {
            let time = diagnostics.time[i];
            let mut row: Vec<Cell> = vec![
                time.into(),
                self.pulse.electric_field(time).into(),
                diagnostics.norm[i].into(),
                diagnostics.z_mean[i].into(),
            ];
            if probe.is_some() {
                row.push(diagnostics.outgoing[i].into());
            }
            t.push(row);
        }
        if let Some(loss) = filter_loss {
            t.note("stationary_filter_loss", loss);
        }
        self.out.write_table("diagnostics.tsv", PROPAGATE, &t)?;

        let mut outgoing = Vec::new();
        let mut onset = None;
        match (probe, exit_z) {
            (Some(probe), Some(z)) => {
                let baseline = probe.measure(&initial);
                outgoing.push((initial.time, baseline));
                let threshold = cfg.onset.factor * baseline;
                let mut t = Table::new(&["t", "outgoing", "ratio", "triggered"]);
                t.note("exit_z", z).note("baseline", baseline).note("factor", cfg.onset.factor);
                for snap in &snapshots.items {
                    let p = probe.measure(&*snap.load()?);
                    outgoing.push((snap.time, p));
                    let hit = p > threshold;
                    if hit && onset.is_none() {
                        onset = Some(snap.time);
                    }
                    t.push(vec![snap.time.into(), p.into(), (p / baseline).into(), hit.into()]);
                }
                t.note("onset", onset.unwrap_or(f64::NAN));
                self.out.write_table("onset.tsv", PROPAGATE, &t)?;
            }
            _ if self.pulse.e0 == 0.0 => self.out.skip(PROPAGATE, NO_FIELD),
            _ => self.out.skip(PROPAGATE, "no barrier at the exit time"),
        }

        if self.pulse.e0 > 0.0 {
            for time in [cfg.trajectories.exit_time, self.pulse.t_peak()] {
                match tunnel_region(&cfg.potential, &self.pulse, time, -ip, &cfg.grid) {
                    Ok(region) => {
                        let text = contour_text(&region, time, self.digits());
                        self.out.write_bytes(
                            &format!("tunnel_{}.tsv", time_tag(time)),
                            PROPAGATE,
                            ProductKind::Contour,
                            text.as_bytes(),
                        )?;
                    }
                    Err(Error::EmptyRegion) => self.out.skip(PROPAGATE, &format!("empty tunnel region at t = {time}")),
                    Err(e) => return Err(e),
                }
            }
        }

        let out = PropagationOut {
            snapshots,
            diagnostics,
            exit_z,
            onset,
            outgoing,
            filter_loss,
        };
        Ok(out)
    }

    fn maps_for(&self, wf: &WavefunctionGrid) -> Result<Vec<PhaseSpaceMap>> {
        let ps = &self.cfg.phase_space;
        let g = &wf.grid;
        let windows = if ps.windows.is_empty() {
            match ps.lag_sampling {
                LagSampling::HalfStep => vec![ZWindow::new(g.z_min, g.z_max)],
                LagSampling::Grid => tile_windows(g.z_min, g.z_max, ps.tile_width, ps.tile_overlap),
            }
        } else {
            ps.windows.clone()
        };
        match ps.lag_sampling {
            LagSampling::HalfStep => windows
                .iter()
                .map(|w| {
                    let (lo, hi) = w.indices(wf)?;
                    let rows = (hi - lo + 1) as u64;
                    let bytes = rows * 2 * g.n_z as u64 * 8 + 2 * (g.n_z * g.n_rho) as u64 * 16;
                    if bytes > ps.memory_budget {
                        return Err(Error::WindowTooLarge {
                            points: rows as usize,
                            bytes,
                            budget: ps.memory_budget,
                        });
                    }
                    wigner_spectral(wf, lo..hi + 1, ps.reduction_mode)
                })
                .collect(),
            LagSampling::Grid => {
                let max_lag = ps.max_lag.unwrap_or(g.n_z / 2);
                wigner_tiled(wf, &windows, max_lag, ps.reduction_mode, ps.memory_budget)
            }
        }
    }

    fn phase_space(&mut self, snaps: &SnapshotStore, write_maps: bool, write_moments: bool) -> Result<PhaseSpaceOut> {
        let ps_cfg = &self.cfg.phase_space;
        let mut out = PhaseSpaceOut {
            maps: Vec::new(),
            profiles: Vec::new(),
            checks: Vec::new(),
        };
        for snap in &snaps.items {
            let wf = snap.load()?;
            let maps = self.maps_for(&wf)?;
            let parts: Vec<MomentProfiles> = maps
                .iter()
                .map(|m| moments(m, ps_cfg.n_moments.max(1), ps_cfg.p0_floor))
                .collect();
            let prof = MomentProfiles::concat(&parts)
                .ok_or_else(|| Error::InvalidInput("phase-space windows produced no rows".into()))?;
            let g = &wf.grid;
            let cur = qmf_from_current(&wf, ZWindow::new(g.z_min, g.z_max), ps_cfg.p0_floor)?;
            let (mut sum, mut n, mut worst) = (0.0, 0usize, 0.0f64);
            let mut cur_at = Vec::with_capacity(prof.z.len());
            for (a, &z) in prof.z.iter().enumerate() {
                let k = g.nearest_z(z);
                let c = if cur.mask[k] { cur.qmf[k] } else { f64::NAN };
                cur_at.push(c);
                if prof.mask[a] && cur.mask[k] {
                    let d = prof.qmf[a] - c;
                    sum += d * d;
                    n += 1;
                    worst = worst.max(d.abs());
                }
            }
            let check = QmfCheck {
                time: snap.time,
                rms: if n > 0 { (sum / n as f64).sqrt() } else { f64::NAN },
                max: worst,
                samples: n,
            };
            let tag = time_tag(snap.time);
            if write_maps {
                for (i, m) in maps.iter().enumerate() {
                    let name = if maps.len() == 1 {
                        format!("wigner_{tag}")
                    } else {
                        format!("wigner_{tag}_w{i}")
                    };
                    self.out.write_array(WIGNER, ArrayProduct::phase_space(&name, m))?;
                }
            }
            if write_moments {
                let mut cols: Vec<String> = vec!["z".into()];
                cols.extend((0..prof.moments.len()).map(|n| format!("P{n}")));
                cols.extend(["qmf", "valid", "qmf_current"].map(String::from));
                let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
                let mut t = Table::new(&col_refs);
                t.note("t", snap.time).note("p0_floor", prof.p0_floor);
                for a in 0..prof.z.len() {
                    let mut row: Vec<Cell> = vec![prof.z[a].into()];
                    row.extend(prof.moments.iter().map(|m| Cell::from(m[a])));
                    row.push(prof.qmf[a].into());
                    row.push(prof.mask[a].into());
                    row.push(cur_at[a].into());
                    t.push(row);
                }
                self.out.write_table(&format!("moments_{tag}.tsv"), QMF, &t)?;
            }
            out.maps.extend(maps);
            out.profiles.push(prof);
            out.checks.push(check);
        }
        if write_moments {
            let mut t = Table::new(&["t", "rms", "max", "samples"]);
            for c in &out.checks {
                t.push(vec![c.time.into(), c.rms.into(), c.max.into(), c.samples.into()]);
            }
            self.out.write_table("qmf_check.tsv", QMF, &t)?;
        }
        Ok(out)
    }

    fn trajectories(&mut self, ip: f64, snaps: &SnapshotStore, ps: &PhaseSpaceOut) -> Result<Option<TrajectoriesOut>> {
        let cfg = self.cfg;
        let tc = &cfg.trajectories;
        if self.pulse.e0 == 0.0 {
            self.out.skip(TRAJECTORIES, NO_FIELD);
            return Ok(None);
        }
        let exit_z = exit_point(&cfg.potential, &self.pulse, tc.exit_time, ip)?;
        let tol = 0.5 * cfg.propagation.dt + 1e-9;
        let at_exit = ps
            .profile_near(tc.exit_time, tol)
            .ok_or_else(|| Error::InvalidInput(format!("no snapshot at exit time {}", tc.exit_time)))?;
        let exit_wf = snaps.near(tc.exit_time, tol).map(|s| s.load()).transpose()?;
        let compare: Vec<&MomentProfiles> = tc
            .compare_times
            .iter()
            .filter_map(|&t| ps.profile_near(t, tol))
            .collect();
        let t_end = tc.t_end.unwrap_or(self.pulse.t_end());

        let mut runs = Vec::new();
        let mut summary = Table::new(&[
            "family",
            "t_i",
            "exit_z",
            "p_z0",
            "p_rho0",
            "mean_delta_p",
            "compared",
            "masked",
            "final_p_z",
            "final_p_x",
            "long_run_p_z",
            "long_run_p_x",
            "status",
        ]);
        let mut comparison = Table::new(&[
            "family",
            "t",
            "z_cl",
            "p_cl",
            "qmf",
            "delta_p",
            "ridge_p",
            "density_weight",
            "ridge_distance",
        ]);
        for &flags in &tc.families {
            let spec = match flags.model {
                Model::SimpleMan => TrajectorySpec::simple_man(tc.exit_time, exit_z, flags.coulomb_force, flags.magnetic_term),
                Model::QmfSeeded => {
                    let (p_z0, p_rho0) = seed_from_qmf(at_exit, exit_z, tc.transverse_model, exit_wf.as_deref())?;
                    TrajectorySpec {
                        t_i: tc.exit_time,
                        exit_z,
                        p_z0,
                        p_rho0,
                        flags,
                    }
                }
            };
            let label = flags.label();
            let (traj, status) = match integrate_with(&spec, &self.pulse, &cfg.potential, t_end, &tc.integrate) {
                Ok(t) => (Some(t), "ok".to_string()),
                Err(Error::StepUnstable { .. }) if tc.integrate.long_run && flags.coulomb_force => {
                    // keep the in-pulse part when only the field-free continuation fails
                    let opts = IntegrateOptions {
                        long_run: false,
                        ..tc.integrate
                    };
                    match integrate_with(&spec, &self.pulse, &cfg.potential, t_end, &opts) {
                        Ok(t) => (Some(t), "long_run_step_unstable".to_string()),
                        Err(e) => (None, error_kind(&e).to_string()),
                    }
                }
                Err(e @ (Error::StepUnstable { .. } | Error::Aborted { .. })) => (None, error_kind(&e).to_string()),
                Err(e) => return Err(e),
            };

            let mut deviations = Vec::new();
            let mut masked = Vec::new();
            if let Some(traj) = &traj {
                let mut t = Table::new(&["t", "x", "z", "p_x", "p_z"]);
                t.note("family", label.as_str());
                for s in &traj.states {
                    t.push(vec![s.t.into(), s.x.into(), s.z.into(), s.p_x.into(), s.p_z.into()]);
                }
                self.out.write_table(&format!("traj_{label}.tsv"), TRAJECTORIES, &t)?;
                for prof in &compare {
                    match compare_to_qmf(traj, std::slice::from_ref(*prof), &ps.maps) {
                        Ok(rows) => deviations.extend(rows),
                        Err(Error::MaskedOut { .. }) => masked.push(prof.time),
                        Err(e) => return Err(e),
                    }
                }
            }
            for d in &deviations {
                comparison.push(vec![
                    label.clone().into(),
                    d.t.into(),
                    d.z_cl.into(),
                    d.p_cl.into(),
                    d.qmf.into(),
                    d.delta_p.into(),
                    d.ridge_p.unwrap_or(f64::NAN).into(),
                    d.density_weight.into(),
                    d.ridge_distance.unwrap_or(f64::NAN).into(),
                ]);
            }
            let nan2 = (f64::NAN, f64::NAN);
            let (fz, fx) = traj.as_ref().map_or(nan2, |t| t.final_momentum);
            let (lz, lx) = traj.as_ref().and_then(|t| t.long_run_momentum).unwrap_or(nan2);
            let run = FamilyRun {
                flags,
                spec,
                trajectory: traj,
                status,
                deviations,
                masked,
            };
            summary.push(vec![
                label.into(),
                spec.t_i.into(),
                spec.exit_z.into(),
                spec.p_z0.into(),
                spec.p_rho0.into(),
                run.mean_delta_p().into(),
                run.deviations.len().into(),
                run.masked.len().into(),
                fz.into(),
                fx.into(),
                lz.into(),
                lx.into(),
                run.status.clone().into(),
            ]);
            runs.push(run);
        }
        self.out.write_table("qmf_comparison.tsv", TRAJECTORIES, &comparison)?;
        self.out.write_table("trajectory_summary.tsv", TRAJECTORIES, &summary)?;
        Ok(Some(TrajectoriesOut { exit_z, runs }))
    }

    /// QMF at the tunnel exit of every snapshot inside the pulse.
    fn qmf_prior(&self, ip: f64, ps: &PhaseSpaceOut) -> Result<ExitPrior> {
        let (mut ts, mut ps_z) = (Vec::new(), Vec::new());
        for prof in &ps.profiles {
            let Ok(z) = exit_point(&self.cfg.potential, &self.pulse, prof.time, ip) else {
                continue;
            };
            let q = prof
                .qmf_at(z)
                .or_else(|| prof.nearest_valid(z, 2.0 * prof.dz).map(|a| prof.qmf[a]));
            if let Some(q) = q {
                ts.push(prof.time);
                ps_z.push(q);
            }
        }
        if ts.is_empty() {
            return Err(Error::InvalidInput("no snapshot gives a QMF value at its tunnel exit".into()));
        }
        ExitPrior::table(ts, ps_z)
    }

    fn reconstruct(
        &mut self,
        ip: Option<f64>,
        ps: Option<&PhaseSpaceOut>,
        detector: Option<&[DetectorMomentum]>,
    ) -> Result<ReconstructionOut> {
        let cfg = self.cfg;
        let rc = &cfg.reconstruction;
        let mut out = ReconstructionOut::default();
        if self.pulse.e0 == 0.0 {
            self.out.skip(RECONSTRUCT, NO_FIELD);
            return Ok(out);
        }
        let window = rc.window(&self.pulse);
        let closure = rc.closure();

        let (t_lo, t_hi) = rc.t_i_range(&self.pulse);
        let n = rc.grid_points;
        let mut t = Table::new(&[
            "t_i",
            "p_z0",
            "p_rho0",
            "p_z_d",
            "p_rho_d",
            "t_i_est",
            "p_z0_rec",
            "p_rho0_rec",
            "n_roots",
            "err_t_i",
            "err_p_z0",
            "err_p_rho0",
            "p_rho0_err_absolute",
            "status",
        ]);
        t.note("window", format!("[{}, {}]", window.0, window.1))
            .note("closure", format!("{closure:?}"))
            .note("prior_model", format!("{:?}", rc.prior_model));
        for &t_i in &linspace(t_lo, t_hi, n) {
            for &p_z0 in &linspace(rc.p_z0_range[0], rc.p_z0_range[1], n) {
                for &p_rho0 in &linspace(rc.p_rho0_range[0], rc.p_rho0_range[1], n) {
                    let flags = Flags {
                        coulomb_force: rc.coulomb_force,
                        magnetic_term: rc.magnetic_term,
                        model: Model::QmfSeeded,
                    };
                    let exit_z = match (rc.coulomb_force, ip) {
                        (false, _) => Ok(0.0),
                        (true, Some(ip)) => exit_point(&cfg.potential, &self.pulse, t_i, ip),
                        (true, None) => Err(Error::InvalidInput("Coulomb round trip needs the ground state".into())),
                    };
                    let truth = TrajectorySpec {
                        t_i,
                        exit_z: *exit_z.as_ref().unwrap_or(&0.0),
                        p_z0,
                        p_rho0,
                        flags,
                    };
                    let prior = match rc.prior_model {
                        PriorModel::ZeroExit => ExitPrior::Zero,
                        PriorModel::QmfTable => ExitPrior::constant(p_z0),
                    };
                    let record = exit_z
                        .and_then(|_| {
                            validate_roundtrip_with(&truth, &self.pulse, &cfg.potential, &prior, window, &cfg.trajectories.integrate, closure)
                        })
                        .map_err(|e| error_kind(&e).to_string());
                    let mut row: Vec<Cell> = vec![t_i.into(), p_z0.into(), p_rho0.into()];
                    match &record {
                        Ok(r) => {
                            let e = r.errors.expect("round trip has errors");
                            row.extend([
                                r.detector.p_z_d.into(),
                                r.detector.p_rho_d.into(),
                                r.t_i_est.into(),
                                r.p_z0_rec.into(),
                                r.p_rho0_rec.into(),
                                r.n_roots.into(),
                                e.t_i.value.into(),
                                e.p_z0.value.into(),
                                e.p_rho0.value.into(),
                                e.p_rho0.absolute.into(),
                                "ok".into(),
                            ]);
                        }
                        Err(kind) => {
                            row.extend((0..5).map(|_| Cell::from(f64::NAN)));
                            row.push(0usize.into());
                            row.extend((0..3).map(|_| Cell::from(f64::NAN)));
                            row.push(false.into());
                            row.push(kind.clone().into());
                        }
                    }
                    t.push(row);
                    out.roundtrip.push(RoundTripRow { truth, record });
                }
            }
        }
        self.out.write_table("roundtrip.tsv", RECONSTRUCT, &t)?;

        if let Some(dets) = detector {
            let prior = match rc.prior_model {
                PriorModel::ZeroExit => ExitPrior::Zero,
                PriorModel::QmfTable => {
                    let (ip, ps) = ip
                        .zip(ps)
                        .ok_or_else(|| Error::InvalidInput("qmf_table prior needs QMF profiles".into()))?;
                    self.qmf_prior(ip, ps)?
                }
            };
            let mut t = Table::new(&["p_z_d", "p_rho_d", "t_i_est", "p_z0_rec", "p_rho0_rec", "n_roots", "status"]);
            t.note("window", format!("[{}, {}]", window.0, window.1))
                .note("closure", format!("{closure:?}"));
            for &det in dets {
                let rec = reconstruct(det, &self.pulse, &prior, window, closure).map_err(|e| error_kind(&e).to_string());
                let mut row: Vec<Cell> = vec![det.p_z_d.into(), det.p_rho_d.into()];
                match &rec {
                    Ok(r) => row.extend([
                        r.t_i_est.into(),
                        r.p_z0_rec.into(),
                        r.p_rho0_rec.into(),
                        r.n_roots.into(),
                        "ok".into(),
                    ]),
                    Err(kind) => {
                        row.extend((0..3).map(|_| Cell::from(f64::NAN)));
                        row.push(0usize.into());
                        row.push(kind.clone().into());
                    }
                }
                t.push(row);
                out.detector.push(rec);
            }
            self.out.write_table("reconstruction.tsv", RECONSTRUCT, &t)?;
        }
        Ok(out)
    }
}

/// Polylines as `z ρ` blocks separated by blank lines.
fn contour_text(region: &crate::phase_space::TunnelRegion, t: f64, digits: usize) -> String {
    use crate::io::format_float;
    let f = |x: f64| format_float(x, digits);
    let mut s = format!(
        "# t = {}\n# field = {}\n# level = {}\n# z\trho\n",
        f(t),
        f(region.field),
        f(region.level)
    );
    for (i, line) in region.polylines.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&format!("# polyline {i} closed = {}\n", line.closed));
        for &(z, r) in &line.points {
            s.push_str(&format!("{}\t{}\n", f(z), f(r)));
        }
    }
    s
}

/// Two-column `p_z p_ρ` detector table.
pub fn read_detector_table(path: &Path) -> Result<Vec<DetectorMomentum>> {
    crate::io::read_numeric(path)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| match row.as_slice() {
            [pz, pr, ..] => DetectorMomentum::new(*pz, *pr),
            _ => Err(Error::Format(format!("{}: row {} needs two columns", path.display(), i + 1))),
        })
        .collect()
}
