//! Independent runs over a list of viscous-stress parameters.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::runner::{simulate, RunStatus};

/// One row of `sweep.csv`. Failed runs keep their error text in `status`
/// and NaN in the numeric columns.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub status: String,
    pub steps: u64,
    pub t_final: f64,
    pub max_vorticity_norm: f64,
    pub min_det: f64,
    pub max_energy_residual: f64,
    pub max_free_energy_increase: f64,
    pub min_toeplitz_relative: f64,
    pub max_moment_excess: f64,
    pub violations: u64,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == RunStatus::Completed.label()
    }
}

/// Runs `base` once per η, in parallel, writing each run under
/// `out/eta_<η>` and the table to `out/sweep.csv`. Rows follow `etas`.
pub fn sweep_eta(base: &RunConfig, etas: &[f64], out: Option<&Path>) -> Result<Vec<SweepRow>> {
    let rows: Vec<SweepRow> = etas
        .par_iter()
        .map(|&eta| {
            let mut cfg = base.clone();
            cfg.physics.eta = eta;
            let dir = out.map(|d| d.join(format!("eta_{eta}")));
            match simulate(&cfg, dir.as_deref()) {
                Ok(r) => {
                    let s = r.summary;
                    SweepRow {
                        eta,
                        status: s.status,
                        steps: s.steps,
                        t_final: s.t_final,
                        max_vorticity_norm: s.max_vorticity_norm,
                        min_det: s.min_det,
                        max_energy_residual: s.max_energy_residual,
                        max_free_energy_increase: s.max_free_energy_increase,
                        min_toeplitz_relative: s.min_toeplitz_relative,
                        max_moment_excess: s.max_moment_excess,
                        violations: s.violations,
                    }
                }
                Err(e) => {
                    log::error!("eta = {eta}: {e}");
                    SweepRow {
                        eta,
                        status: format!("error: {e}"),
                        steps: 0,
                        t_final: f64::NAN,
                        max_vorticity_norm: f64::NAN,
                        min_det: f64::NAN,
                        max_energy_residual: f64::NAN,
                        max_free_energy_increase: f64::NAN,
                        min_toeplitz_relative: f64::NAN,
                        max_moment_excess: f64::NAN,
                        violations: 0,
                    }
                }
            }
        })
        .collect();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(rows)
}
