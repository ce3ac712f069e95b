//! Self-convergence studies along one discretization axis.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::runner::{simulate, state_distance, RunStatus, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Dt,
    Grid,
    /// Angular cutoff of the kinetic model.
    J,
    /// Galerkin cutoff of the regularized scheme.
    Ell,
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(Axis::Dt),
            "grid" => Ok(Axis::Grid),
            "J" | "j" => Ok(Axis::J),
            "ell" => Ok(Axis::Ell),
            other => Err(CliError::Config(format!("--axis {other:?}: expected dt, grid, J or ell"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Dt => "dt",
            Axis::Grid => "grid",
            Axis::J => "J",
            Axis::Ell => "ell",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub value: f64,
    /// L² distance of the final state to the reference.
    pub difference: f64,
    /// log(d_prev / d) / log(h_prev / h) against the previous row; NaN for
    /// the first row. Grid, J and ell rows use 1/value as h.
    pub order: f64,
}

fn apply(base: &RunConfig, axis: Axis, value: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    let whole = || {
        if value >= 1.0 && value.fract() == 0.0 {
            Ok(value as usize)
        } else {
            Err(CliError::Config(format!("--values: {axis} needs positive integers, got {value}")))
        }
    };
    match axis {
        Axis::Dt => cfg.time.dt = value,
        Axis::Grid => {
            cfg.grid.nx = whole()?;
            cfg.grid.ny = whole()?;
        }
        Axis::J => cfg.model.theta_modes = Some(whole()?),
        Axis::Ell => cfg.model.galerkin_ell = Some(whole()?),
    }
    cfg.output.snapshot_every = 0.0;
    cfg.validate()?;
    Ok(cfg)
}

fn final_state(cfg: &RunConfig) -> Result<State> {
    let r = simulate(cfg, None)?;
    match r.status {
        RunStatus::Completed => Ok(r.state),
        other => Err(CliError::Blowup(other.label())),
    }
}

/// Runs `base` at each value of `axis` and measures the final states
/// against a reference: the finest value (smallest dt, largest grid or J),
/// or for `ell` the unregularized run. Rows are ordered from coarse to
/// fine.
pub fn convergence_study(base: &RunConfig, axis: Axis, values: &[f64], out: Option<&Path>) -> Result<Vec<ConvergenceRow>> {
    if values.len() < 3 {
        return Err(CliError::Config("--values: a convergence study needs at least three values".into()));
    }
    if axis == Axis::J && base.model.kind != crate::config::ModelKind::Doi {
        return Err(CliError::Config("--axis J applies to model.kind = \"doi\" only".into()));
    }
    let mut values = values.to_vec();
    // Coarse to fine.
    match axis {
        Axis::Dt => values.sort_by(|a, b| b.total_cmp(a)),
        _ => values.sort_by(|a, b| a.total_cmp(b)),
    }
    let mut cfgs = values.iter().map(|&v| apply(base, axis, v)).collect::<Result<Vec<_>>>()?;
    let reference_cfg = match axis {
        Axis::Ell => {
            let mut c = base.clone();
            c.model.galerkin_ell = None;
            c.output.snapshot_every = 0.0;
            c
        }
        _ => cfgs.pop().expect("at least three values"),
    };
    if axis != Axis::Ell {
        values.pop();
    }
    cfgs.push(reference_cfg);
    let mut states = cfgs.par_iter().map(final_state).collect::<Result<Vec<_>>>()?;
    let reference = states.pop().expect("reference run");
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(values.len());
    for (v, s) in values.iter().zip(&states) {
        let difference = state_distance(s, &reference)?;
        let h = if axis == Axis::Dt { *v } else { 1.0 / v };
        let order = match rows.last() {
            Some(prev) => {
                let hp = if axis == Axis::Dt { prev.value } else { 1.0 / prev.value };
                (prev.difference / difference).ln() / (hp / h).ln()
            }
            None => f64::NAN,
        };
        rows.push(ConvergenceRow { value: *v, difference, order });
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(format!("converge_{axis}.csv")))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(rows)
}
