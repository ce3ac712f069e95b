//! Run configuration: a flat TOML file with one table per section.
//!
//! ```toml
//! [model]
//! kind = "doi"          # "da" or "doi"
//! theta_modes = 16      # angular cutoff J, required for doi
//!
//! [physics]
//! eta = 1.0
//!
//! [time]
//! dt = 1e-3
//! t_end = 1.0
//! ```
//!
//! Any key can be overridden from the environment as
//! `DOISIM__<SECTION>__<KEY>=<value>`, e.g. `DOISIM__PHYSICS__ETA=10`.
//! Values are parsed as TOML scalars and fall back to strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rodsim_core::{Fraction, Grid};

use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "DOISIM__";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Da,
    Doi,
}

/// What to do when a monitored invariant fails during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationPolicy {
    #[default]
    Warn,
    Abort,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Angular cutoff J of the kinetic model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub galerkin_ell: Option<usize>,
    #[serde(default)]
    pub on_violation: ViolationPolicy,
    /// Allowed relative Toeplitz eigenvalue deficit during kinetic runs.
    #[serde(default = "defaults::toeplitz_tol")]
    pub toeplitz_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    /// Retained fraction of each axis' wavenumber range, "num/den".
    pub dealias: String,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { nx: 64, ny: 64, dealias: "2/3".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub eta: f64,
    pub k: f64,
    pub nu: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection { eta: 1.0, k: 1.0, nu: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    /// Absolute end time; a restarted run continues from the snapshot time.
    pub t_end: f64,
    pub cfl_safety: f64,
    pub enforce_cfl: bool,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { dt: 1e-3, t_end: 1.0, cfl_safety: 0.5, enforce_cfl: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityInit {
    Zero,
    TaylorGreen,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorInit {
    Isotropic,
    Perturbed,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationInit {
    Isotropic,
    VonMises,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub velocity: VelocityInit,
    pub amplitude: f64,
    /// Conformation preset of the closure model.
    pub tensor: TensorInit,
    /// Size of the anisotropic perturbation of the conformation.
    pub eps: f64,
    /// Orientation preset of the kinetic model.
    pub orientation: OrientationInit,
    /// Von Mises concentration.
    pub kappa: f64,
    /// Amplitude of the spatial tilt θ₀(x) = tilt·sin(x₁ + x₂).
    pub tilt: f64,
    /// Mean mass density ∫f dθ.
    pub mass: f64,
    /// Decay ratio of angular modes for random orientations.
    pub ratio: f64,
    pub seed: u64,
    /// Largest wavenumber component of random fields.
    pub kmax: i64,
    /// Start from a snapshot instead of the presets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            velocity: VelocityInit::TaylorGreen,
            amplitude: 1.0,
            tensor: TensorInit::Perturbed,
            eps: 0.3,
            orientation: OrientationInit::VonMises,
            kappa: 1.0,
            tilt: 0.5,
            mass: 1.0,
            ratio: 0.3,
            seed: 0,
            kmax: 4,
            snapshot: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Simulated time between snapshots; 0 writes only the final one.
    pub snapshot_every: f64,
    /// Steps between diagnostics rows.
    pub diagnostics_every: usize,
    /// Steps between Toeplitz checks of kinetic runs; 0 disables them.
    pub toeplitz_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), snapshot_every: 0.0, diagnostics_every: 1, toeplitz_every: 50 }
    }
}

mod defaults {
    pub fn toeplitz_tol() -> f64 {
        1e-6
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn invalid(key: &str, why: &str) -> CliError {
    CliError::Config(format!("{key}: {why}"))
}

/// Number of steps of size `dt` in `span`, which must be a whole multiple.
pub fn whole_steps(span: f64, dt: f64, key: &str) -> Result<u64> {
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.abs().max(dt) {
        return Err(invalid(key, &format!("{span} is not a whole multiple of time.dt = {dt}")));
    }
    Ok(n as u64)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_env(text, std::env::vars())
    }

    /// Parses `text` with overrides taken from `env` (pairs of variable name
    /// and value); variables without the prefix are ignored.
    pub fn parse_with_env(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        apply_env(&mut table, env)?;
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dump(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        let frac = parse_fraction(&self.grid.dealias)?;
        Grid::with_dealias(self.grid.nx, self.grid.ny, frac).map_err(|e| invalid("grid", &e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, "must be positive and finite"))
            }
        };
        let p = &self.physics;
        if !(p.eta >= 0.0 && p.eta.is_finite()) {
            return Err(invalid("physics.eta", "must be non-negative and finite"));
        }
        positive("physics.k", p.k)?;
        positive("physics.nu", p.nu)?;
        positive("time.dt", self.time.dt)?;
        positive("time.cfl_safety", self.time.cfl_safety)?;
        if !(self.time.t_end >= 0.0 && self.time.t_end.is_finite()) {
            return Err(invalid("time.t_end", "must be non-negative and finite"));
        }
        whole_steps(self.time.t_end, self.time.dt, "time.t_end")?;
        if self.output.snapshot_every < 0.0 {
            return Err(invalid("output.snapshot_every", "must be non-negative"));
        }
        if self.output.snapshot_every > 0.0 {
            whole_steps(self.output.snapshot_every, self.time.dt, "output.snapshot_every")?;
        }
        if self.output.diagnostics_every == 0 {
            return Err(invalid("output.diagnostics_every", "must be at least 1"));
        }
        if self.model.galerkin_ell == Some(0) {
            return Err(invalid("model.galerkin_ell", "must be at least 1"));
        }
        positive("model.toeplitz_tol", self.model.toeplitz_tol)?;
        let i = &self.init;
        positive("init.mass", i.mass)?;
        if !(i.amplitude >= 0.0 && i.eps >= 0.0 && i.kappa >= 0.0) {
            return Err(invalid("init", "amplitude, eps and kappa must be non-negative"));
        }
        if i.kmax < 1 {
            return Err(invalid("init.kmax", "must be at least 1"));
        }
        if !(0.0..=0.3).contains(&i.ratio) {
            return Err(invalid("init.ratio", "must lie in [0, 0.3] to keep random orientations positive"));
        }
        match self.model.kind {
            ModelKind::Doi => match self.model.theta_modes {
                None => return Err(invalid("model.theta_modes", "required for the doi model")),
                Some(j) if j < 4 => return Err(invalid("model.theta_modes", "must be at least 4")),
                _ => {}
            },
            ModelKind::Da => {
                if self.model.theta_modes.is_some() {
                    return Err(invalid("model.theta_modes", "only applies to the doi model"));
                }
                if i.eps >= 0.5 && i.tensor != TensorInit::Isotropic {
                    return Err(invalid("init.eps", "must be below 0.5 for a positive definite conformation"));
                }
            }
        }
        Ok(())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text)
}

fn parse_fraction(s: &str) -> Result<Fraction> {
    let err = || invalid("grid.dealias", &format!("expected \"num/den\", got {s:?}"));
    let (n, d) = s.split_once('/').ok_or_else(err)?;
    let n: u32 = n.trim().parse().map_err(|_| err())?;
    let d: u32 = d.trim().parse().map_err(|_| err())?;
    Fraction::new(n, d).map_err(|e| invalid("grid.dealias", &e.to_string()))
}

fn apply_env(table: &mut toml::Table, env: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = name[ENV_PREFIX.len()..].to_ascii_lowercase();
        let Some((section, key)) = rest.split_once("__") else {
            return Err(CliError::Config(format!("{name}: expected {ENV_PREFIX}<SECTION>__<KEY>")));
        };
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("key v"),
            Err(_) => toml::Value::String(raw.clone()),
        };
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(sec) = entry else {
            return Err(CliError::Config(format!("{name}: {section} is not a section")));
        };
        sec.insert(key.to_string(), value);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn minimal_da_config_gets_defaults() {
        let cfg = RunConfig::parse_with_env("[model]\nkind = \"da\"\n", no_env()).unwrap();
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.physics, PhysicsSection::default());
        assert_eq!(cfg.model.on_violation, ViolationPolicy::Warn);
    }

    #[test]
    fn kinetic_config_requires_theta_modes() {
        let err = RunConfig::parse_with_env("[model]\nkind = \"doi\"\n", no_env()).unwrap_err();
        assert!(err.to_string().contains("theta_modes"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse_with_env("[model]\nkind = \"da\"\n[physics]\nviscosity = 2\n", no_env()).unwrap_err();
        assert!(err.to_string().contains("viscosity"), "{err}");
        let err = RunConfig::parse_with_env("[model]\nkind = \"da\"\n[time]\ndt = \"fast\"\n", no_env()).unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
        let err = RunConfig::parse_with_env("[model]\nkind = \"da\"\n[physics]\nk = -1.0\n", no_env()).unwrap_err();
        assert!(err.to_string().contains("physics.k"), "{err}");
    }

    #[test]
    fn dump_is_a_fixed_point() {
        let text = "[model]\nkind = \"doi\"\ntheta_modes = 8\ngalerkin_ell = 5\n[init]\nsnapshot = \"a.bin\"\n";
        let cfg = RunConfig::parse_with_env(text, no_env()).unwrap();
        let again = RunConfig::parse_with_env(&cfg.dump(), no_env()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.dump(), cfg.dump());
    }

    #[test]
    fn environment_overrides_keys() {
        let env = vec![
            ("DOISIM__PHYSICS__ETA".to_string(), "10".to_string()),
            ("DOISIM__OUTPUT__DIR".to_string(), "runs/x".to_string()),
            ("DOISIM__MODEL__KIND".to_string(), "doi".to_string()),
            ("DOISIM__MODEL__THETA_MODES".to_string(), "6".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ];
        let cfg = RunConfig::parse_with_env("[model]\nkind = \"da\"\n", env).unwrap();
        assert_eq!(cfg.physics.eta, 10.0);
        assert_eq!(cfg.output.dir, PathBuf::from("runs/x"));
        assert_eq!(cfg.model.kind, ModelKind::Doi);
        let bad = vec![("DOISIM__PHYSICS__BOGUS".to_string(), "1".to_string())];
        assert!(RunConfig::parse_with_env("[model]\nkind = \"da\"\n", bad).is_err());
    }

    #[test]
    fn times_must_be_whole_steps() {
        let err = RunConfig::parse_with_env("[model]\nkind = \"da\"\n[time]\ndt = 0.3\nt_end = 1.0\n", no_env()).unwrap_err();
        assert!(err.to_string().contains("time.t_end"), "{err}");
    }
}
