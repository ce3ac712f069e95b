//! Single runs: initial data, the step loop, diagnostics, snapshots and the
//! run summary.
//!
//! Each snapshot is also a checkpoint: after it is written the live state
//! is replaced by its decoded copy and the multistep history is reset, so a
//! run restarted from any snapshot reproduces the original continuation bit
//! for bit.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rodsim_core::da::{self, DAParams, DASolver, DAState, EnergySample};
use rodsim_core::diagnostics::{da_record, norm_ledger};
use rodsim_core::doi::{self, AngularDistribution, DoiParams, DoiSolver, DoiState, FlowMode};
use rodsim_core::moments::{toeplitz_realizability, trig_moments};
use rodsim_core::random;
use rodsim_core::snapshot::{Snapshot, SnapshotKind};
use rodsim_core::{ops, Grid, ScalarField, TensorField2x2, VectorField};

use crate::config::{whole_steps, ModelKind, OrientationInit, RunConfig, TensorInit, VelocityInit, ViolationPolicy};
use crate::error::{CliError, Result};

/// Version string recorded in every artifact set.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("RODSIM_GIT_DESCRIBE"), ")");

#[derive(Clone, Debug)]
pub enum State {
    Da(DAState),
    Doi(DoiState),
}

impl State {
    pub fn t(&self) -> f64 {
        match self {
            State::Da(s) => s.t,
            State::Doi(s) => s.t,
        }
    }

    fn set_t(&mut self, t: f64) {
        match self {
            State::Da(s) => s.t = t,
            State::Doi(s) => s.t = t,
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            State::Da(s) => s.grid(),
            State::Doi(s) => s.grid(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        match self {
            State::Da(s) => Snapshot::from_da(s),
            State::Doi(s) => Snapshot::from_doi(s),
        }
    }

    pub fn velocity(&self) -> &VectorField {
        match self {
            State::Da(s) => &s.u,
            State::Doi(s) => &s.u,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Non-finite values or a failed stability check; the last good state
    /// was saved when artifacts are enabled.
    Blowup(String),
    /// A monitored invariant failed under the abort policy.
    Aborted(String),
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Completed => "completed".into(),
            RunStatus::Blowup(m) => format!("blowup: {m}"),
            RunStatus::Aborted(m) => format!("aborted: {m}"),
        }
    }
}

/// Run-level extremes of the diagnostics. Entries a model does not track
/// are NaN.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub version: String,
    pub model: String,
    pub status: String,
    pub t_start: f64,
    pub t_final: f64,
    pub steps: u64,
    pub max_vorticity_norm: f64,
    pub final_kinetic_energy: f64,
    pub min_det: f64,
    pub max_trace_dev: f64,
    pub max_norm: f64,
    pub max_det: f64,
    /// Largest |energy-budget residual| over the run.
    pub max_energy_residual: f64,
    /// Largest increase of the free energy between consecutive rows.
    pub max_free_energy_increase: f64,
    pub min_toeplitz_relative: f64,
    pub max_moment_excess: f64,
    pub violations: u64,
}

impl Summary {
    fn new(kind: ModelKind, t: f64) -> Self {
        Summary {
            version: VERSION.to_string(),
            model: format!("{kind:?}").to_lowercase(),
            status: String::new(),
            t_start: t,
            t_final: t,
            steps: 0,
            max_vorticity_norm: 0.0,
            final_kinetic_energy: f64::NAN,
            min_det: f64::NAN,
            max_trace_dev: f64::NAN,
            max_norm: f64::NAN,
            max_det: f64::NAN,
            max_energy_residual: f64::NAN,
            max_free_energy_increase: f64::NAN,
            min_toeplitz_relative: f64::NAN,
            max_moment_excess: f64::NAN,
            violations: 0,
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        b
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        b
    } else {
        a.min(b)
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub status: RunStatus,
    pub state: State,
    pub summary: Summary,
    pub snapshots: Vec<PathBuf>,
}

pub fn da_params(cfg: &RunConfig) -> DAParams {
    DAParams {
        eta: cfg.physics.eta,
        k: cfg.physics.k,
        nu: cfg.physics.nu,
        dt: cfg.time.dt,
        galerkin_ell: cfg.model.galerkin_ell,
        cfl_safety: cfg.time.cfl_safety,
        enforce_cfl: cfg.time.enforce_cfl,
        ..DAParams::default()
    }
}

pub fn doi_params(cfg: &RunConfig) -> DoiParams {
    DoiParams {
        eta: cfg.physics.eta,
        k: cfg.physics.k,
        nu: cfg.physics.nu,
        dt: cfg.time.dt,
        galerkin_ell: cfg.model.galerkin_ell,
        cfl_safety: cfg.time.cfl_safety,
        enforce_cfl: cfg.time.enforce_cfl,
        flow: FlowMode::Coupled,
    }
}

fn initial_velocity(cfg: &RunConfig, grid: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
    let i = &cfg.init;
    match i.velocity {
        VelocityInit::Zero => VectorField::zeros(grid),
        VelocityInit::TaylorGreen => da::presets::taylor_green(grid, i.amplitude),
        VelocityInit::Random if i.amplitude == 0.0 => VectorField::zeros(grid),
        VelocityInit::Random => random::random_velocity(grid, rng, i.amplitude, i.kmax),
    }
}

/// Initial state from the presets or the configured snapshot.
pub fn initial_state(cfg: &RunConfig) -> Result<State> {
    let grid = cfg.grid()?;
    if let Some(path) = &cfg.init.snapshot {
        let snap = Snapshot::load(path).map_err(|e| CliError::Config(format!("init.snapshot {}: {e}", path.display())))?;
        return Ok(match (cfg.model.kind, snap.kind) {
            (ModelKind::Da, SnapshotKind::Da) => State::Da(snap.to_da_on(&grid)?),
            (ModelKind::Doi, SnapshotKind::Doi) => {
                let mut st = snap.to_doi_on(&grid)?;
                let order = cfg.model.theta_modes.expect("validated");
                if st.f.order() != order {
                    st.f = st.f.with_order(order);
                }
                State::Doi(st)
            }
            (m, k) => return Err(CliError::Config(format!("init.snapshot holds a {k} state but model.kind is {m:?}"))),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init.seed);
    let u = initial_velocity(cfg, &grid, &mut rng);
    let i = &cfg.init;
    Ok(match cfg.model.kind {
        ModelKind::Da => {
            let a = match i.tensor {
                TensorInit::Isotropic => da::presets::constant_diagonal(&grid, 0.5),
                TensorInit::Perturbed => da::presets::perturbed_isotropic(&grid, i.eps),
                TensorInit::Random => random::random_conformation(&grid, &mut rng, i.eps, i.kmax),
            };
            State::Da(DAState::new(u, a, 0.0)?)
        }
        ModelKind::Doi => {
            let order = cfg.model.theta_modes.expect("validated");
            let f = match i.orientation {
                OrientationInit::Isotropic => AngularDistribution::isotropic(&ScalarField::constant(&grid, i.mass), order),
                OrientationInit::VonMises => {
                    let tilt = i.tilt;
                    doi::presets::von_mises(&grid, order, i.mass, i.kappa, move |x, y| tilt * (x + y).sin())
                }
                OrientationInit::Random => {
                    let f = random::random_distribution(&grid, &mut rng, order, i.ratio, i.kmax);
                    f.map(|m| m.scaled(i.mass))
                }
            };
            State::Doi(DoiState::new(u, f, 0.0)?)
        }
    })
}

enum Stepper {
    Da(DASolver),
    Doi(DoiSolver),
}

impl Stepper {
    fn new(cfg: &RunConfig, state: &mut State) -> Result<Self> {
        let grid = state.grid().clone();
        Ok(match state {
            State::Da(s) => {
                let solver = DASolver::new(&grid, da_params(cfg))?;
                solver.project_state(s);
                Stepper::Da(solver)
            }
            State::Doi(s) => {
                let solver = DoiSolver::new(&grid, s.f.order(), doi_params(cfg))?;
                solver.project_state(s);
                Stepper::Doi(solver)
            }
        })
    }

    fn cfl_limit(&self, state: &State) -> f64 {
        match (self, state) {
            (Stepper::Da(s), State::Da(st)) => da::cfl_limit(st, s.params()),
            (Stepper::Doi(s), State::Doi(st)) => doi::cfl_limit(st, s.params()),
            _ => unreachable!("stepper and state kinds agree"),
        }
    }

    fn step(&mut self, state: &mut State) -> rodsim_core::Result<()> {
        match (self, state) {
            (Stepper::Da(s), State::Da(st)) => s.step(st),
            (Stepper::Doi(s), State::Doi(st)) => s.step(st),
            _ => unreachable!("stepper and state kinds agree"),
        }
    }

    /// Replaces the state by its decoded snapshot, projected exactly as a
    /// run started from that snapshot would be, and drops the history.
    fn checkpoint(&mut self, state: &mut State, snap: &Snapshot) -> Result<()> {
        let grid = state.grid().clone();
        match self {
            Stepper::Da(s) => {
                let mut st = snap.to_da_on(&grid)?;
                s.project_state(&mut st);
                s.reset_history();
                *state = State::Da(st);
            }
            Stepper::Doi(s) => {
                let mut st = snap.to_doi_on(&grid)?;
                s.project_state(&mut st);
                s.reset_history();
                *state = State::Doi(st);
            }
        }
        Ok(())
    }
}



struct Artifacts {
    dir: PathBuf,
    diagnostics: csv::Writer<File>,
    toeplitz: Option<csv::Writer<File>>,
    snapshots: Vec<PathBuf>,
}

impl Artifacts {
    fn create(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(dir.join("snapshots"))?;
        fs::write(dir.join("config.toml"), format!("# rodsim {VERSION}\n{}", cfg.dump()))?;
        let mut diagnostics = csv::Writer::from_path(dir.join("diagnostics.csv"))?;
        let toeplitz = match cfg.model.kind {
            ModelKind::Da => {
                diagnostics.write_record(rodsim_core::diagnostics::DaRecord::COLUMNS)?;
                None
            }
            ModelKind::Doi => {
                diagnostics.write_record(rodsim_core::diagnostics::DoiRecord::COLUMNS)?;
                let mut w = csv::Writer::from_path(dir.join("toeplitz.csv"))?;
                w.write_record(["t", "min_relative", "violations"])?;
                Some(w)
            }
        };
        Ok(Artifacts { dir: dir.to_path_buf(), diagnostics, toeplitz, snapshots: Vec::new() })
    }

    fn row(&mut self, values: &[f64]) -> Result<()> {
        self.diagnostics.write_record(values.iter().map(|v| format!("{v:e}")))?;
        Ok(())
    }

    fn snapshot(&mut self, snap: &Snapshot, name: &str) -> Result<()> {
        let path = self.dir.join("snapshots").join(name);
        snap.save(&path)?;
        self.snapshots.push(path);
        Ok(())
    }

    fn finish(mut self, summary: &Summary) -> Result<Vec<PathBuf>> {
        self.diagnostics.flush()?;
        if let Some(w) = self.toeplitz.as_mut() {
            w.flush()?;
        }
        let text = toml::to_string(summary).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(self.dir.join("summary.toml"), text)?;
        Ok(self.snapshots)
    }
}

/// Monitors and ledger of one run.
struct Monitor<'a> {
    cfg: &'a RunConfig,
    summary: Summary,
    artifacts: Option<Artifacts>,
    /// Energy samples of the last three steps (closure model).
    energy: Vec<EnergySample>,
    /// Closure record waiting for its centred energy residual.
    pending: Option<rodsim_core::diagnostics::DaRecord>,
    last_free_energy: Option<f64>,
}

impl<'a> Monitor<'a> {
    fn violation(&mut self, what: String) -> Option<RunStatus> {
        self.summary.violations += 1;
        match self.cfg.model.on_violation {
            ViolationPolicy::Warn => {
                log::warn!("{what}");
                None
            }
            ViolationPolicy::Abort => Some(RunStatus::Aborted(what)),
        }
    }

    /// Called after every step (and once at the start) with the global step
    /// index. Returns a status when the run has to stop.
    fn observe(&mut self, state: &State, n: u64, last: bool) -> Result<Option<RunStatus>> {
        let every = self.cfg.output.diagnostics_every as u64;
        let row_due = n % every == 0 || last;
        self.summary.t_final = state.t();
        match state {
            State::Da(s) => {
                let p = da_params(self.cfg);
                let r = da::structural_report(&s.a);
                let sm = &mut self.summary;
                sm.min_det = nan_min(sm.min_det, r.min_det);
                sm.max_trace_dev = nan_max(sm.max_trace_dev, r.max_trace_dev);
                sm.max_norm = nan_max(sm.max_norm, r.max_norm);
                sm.max_det = nan_max(sm.max_det, r.max_det);
                if self.artifacts.is_some() {
                    self.energy.push(da::energy_sample(s, &p));
                    if self.energy.len() > 3 {
                        self.energy.remove(0);
                    }
                    let residual = if self.energy.len() == 3 {
                        da::da_energy_budget(&self.energy)?.residuals[0].1
                    } else {
                        f64::NAN
                    };
                    if !residual.is_nan() {
                        sm.max_energy_residual = nan_max(sm.max_energy_residual, residual.abs());
                    }
                    if let Some(mut rec) = self.pending.take() {
                        rec.energy_residual = residual;
                        self.artifacts.as_mut().expect("checked").row(&rec.row())?;
                    }
                    if row_due {
                        let rec = da_record(s, &p);
                        sm.max_vorticity_norm = sm.max_vorticity_norm.max(rec.enstrophy.sqrt());
                        sm.final_kinetic_energy = rec.kinetic_energy;
                        if last {
                            self.artifacts.as_mut().expect("checked").row(&rec.row())?;
                        } else {
                            self.pending = Some(rec);
                        }
                    }
                }
                if r.min_det <= 0.0 {
                    return Ok(self.violation(format!("det A reached {:e} at t = {}", r.min_det, s.t)));
                }
                if r.max_trace_dev > p.tol_trace {
                    return Ok(self.violation(format!("trace drift {:e} at t = {}", r.max_trace_dev, s.t)));
                }
            }
            State::Doi(s) => {
                if self.artifacts.is_none() {
                    return Ok(None);
                }
                let mut status = None;
                let te = self.cfg.output.toeplitz_every as u64;
                if te > 0 && (n % te == 0 || last) {
                    let order = s.f.order();
                    let report = toeplitz_realizability(&trig_moments(&s.f, order)?, order, self.cfg.model.toeplitz_tol)?;
                    let sm = &mut self.summary;
                    sm.min_toeplitz_relative = nan_min(sm.min_toeplitz_relative, report.min_relative);
                    if let Some(w) = self.artifacts.as_mut().expect("checked").toeplitz.as_mut() {
                        w.write_record([format!("{:e}", s.t), format!("{:e}", report.min_relative), report.violations.to_string()])?;
                    }
                    if !report.ok {
                        status = self.violation(format!(
                            "Toeplitz check failed at t = {} (min relative eigenvalue {:e})",
                            s.t, report.min_relative
                        ));
                    }
                }
                if row_due && status.is_none() {
                    // The entropy is undefined for a visibly negative density.
                    let rec = match norm_ledger(s) {
                        Ok(rec) => rec,
                        Err(e @ rodsim_core::Error::PositivityViolation { .. }) => {
                            return Ok(self.violation(format!("no ledger row at t = {}: {e}", s.t)));
                        }
                        Err(e) => return Err(e.into()),
                    };
                    let sm = &mut self.summary;
                    sm.max_vorticity_norm = sm.max_vorticity_norm.max(rec.vorticity_norm);
                    sm.final_kinetic_energy = rec.kinetic_energy;
                    sm.max_moment_excess = nan_max(sm.max_moment_excess, rec.moment_bound_excess);
                    if let Some(prev) = self.last_free_energy {
                        sm.max_free_energy_increase = nan_max(sm.max_free_energy_increase, rec.free_energy - prev);
                    }
                    self.last_free_energy = Some(rec.free_energy);
                    self.artifacts.as_mut().expect("checked").row(&rec.row())?;
                }
                return Ok(status);
            }
        }
        Ok(None)
    }
}

/// Runs `cfg`. With `out` set, writes the config echo, diagnostics CSV,
/// snapshots and a summary there; without it only the final state and
/// the structural extremes are produced.
pub fn simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<RunReport> {
    cfg.validate()?;
    let mut state = initial_state(cfg)?;
    let mut stepper = Stepper::new(cfg, &mut state)?;
    let dt = cfg.time.dt;
    let t0 = state.t();
    if cfg.time.t_end < t0 {
        return Err(CliError::Config(format!("time.t_end = {} precedes the start time {t0}", cfg.time.t_end)));
    }
    let n0 = (t0 / dt).round() as u64;
    let nsteps = whole_steps(cfg.time.t_end - t0, dt, "time.t_end")?;
    if cfg.time.enforce_cfl {
        let limit = stepper.cfl_limit(&state);
        if dt > limit {
            return Err(CliError::Config(format!("time.dt = {dt:e} exceeds the stability limit {limit:e}")));
        }
    }
    let per_snapshot = match cfg.output.snapshot_every {
        s if s > 0.0 => Some(whole_steps(s, dt, "output.snapshot_every")?),
        _ => None,
    };
    let artifacts = out.map(|d| Artifacts::create(d, cfg)).transpose()?;
    let mut mon = Monitor {
        cfg,
        summary: Summary::new(cfg.model.kind, t0),
        artifacts,
        energy: Vec::new(),
        pending: None,
        last_free_energy: None,
    };
    if per_snapshot.is_some() {
        let snap = state.snapshot();
        if let Some(a) = mon.artifacts.as_mut() {
            a.snapshot(&snap, &format!("snap_{n0:08}.bin"))?;
        }
        // A state read from a snapshot is already a checkpoint.
        if cfg.init.snapshot.is_none() {
            stepper.checkpoint(&mut state, &snap)?;
        }
    }
    let mut status = mon.observe(&state, n0, nsteps == 0)?.unwrap_or(RunStatus::Completed);
    let mut steps = 0;
    while status == RunStatus::Completed && steps < nsteps {
        let last_good = state.clone();
        if let Err(e) = stepper.step(&mut state) {
            let msg = e.to_string();
            if let Some(a) = mon.artifacts.as_mut() {
                a.snapshot(&last_good.snapshot(), "last_good.bin")?;
            }
            state = last_good;
            status = match e {
                rodsim_core::Error::Blowup { .. } | rodsim_core::Error::UnstableTimeStep { .. } => RunStatus::Blowup(msg),
                other => return Err(other.into()),
            };
            break;
        }
        steps += 1;
        let n = n0 + steps;
        // Times are step multiples; summing dt would drift.
        state.set_t(n as f64 * dt);
        if per_snapshot.is_some_and(|k| n % k == 0) {
            let snap = state.snapshot();
            if let Some(a) = mon.artifacts.as_mut() {
                a.snapshot(&snap, &format!("snap_{n:08}.bin"))?;
            }
            stepper.checkpoint(&mut state, &snap)?;
        }
        if let Some(s) = mon.observe(&state, n, steps == nsteps)? {
            status = s;
        }
    }
    let mut summary = mon.summary;
    summary.steps = steps;
    summary.status = status.label();
    if summary.final_kinetic_energy.is_nan() {
        summary.final_kinetic_energy = 0.5 * state.velocity().l2_norm_sq();
    }
    let snapshots = match mon.artifacts {
        Some(mut a) => {
            a.snapshot(&state.snapshot(), "final.bin")?;
            a.finish(&summary)?
        }
        None => Vec::new(),
    };
    Ok(RunReport { status, state, summary, snapshots })
}

/// L² distance between two final states of the same model, after bringing
/// `reference` onto the grid and angular cutoff of `state`. Angular modes
/// missing from the coarser cutoff count as zero.
pub fn state_distance(state: &State, reference: &State) -> Result<f64> {
    let grid = state.grid();
    let vel = |u: &VectorField, r: &VectorField| {
        let mut d = r.map(|f| f.resample(grid));
        d.axpy(-1.0, u);
        d.l2_norm_sq()
    };
    Ok(match (state, reference) {
        (State::Da(s), State::Da(r)) => {
            let ra: TensorField2x2 = r.a.map(|f| f.resample(grid));
            vel(&s.u, &r.u) + ra.add(&s.a.scaled(-1.0)).l2_norm_sq()
        }
        (State::Doi(s), State::Doi(r)) => {
            let order = s.f.order().max(r.f.order());
            let (sf, rf) = (s.f.with_order(order), r.f.with_order(order));
            let mut acc = 0.0;
            for j in 0..=order {
                let d = &rf.mode(j).resample(grid) - sf.mode(j);
                // ∫|f|² dθ = 2π Σ_{|j|≤J} |ĉ_j|².
                acc += if j == 0 { 1.0 } else { 2.0 } * d.l2_norm_sq();
            }
            vel(&s.u, &r.u) + 2.0 * std::f64::consts::PI * acc
        }
        _ => return Err(CliError::Config("states of different models".into())),
    }
    .sqrt())
}

/// Divergence of a final velocity, for sanity reporting.
pub fn max_divergence(state: &State) -> f64 {
    ops::max_divergence(state.velocity())
}
