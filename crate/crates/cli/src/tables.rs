//! CSV export of the integer coefficient tables of the moment equations
//! and the quartic form behind the viscous stress.

use std::path::{Path, PathBuf};

use rodsim_core::diagnostics::quartic_table;
use rodsim_core::moments::{diffusion_table, drift_table};

use crate::error::Result;

/// Writes `diffusion_n{2,4}.csv`, `drift_n{2,4}.csv` and `quartic.csv`
/// into `dir`, returning the paths.
pub fn write_tables(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for n in [2, 4] {
        let path = dir.join(format!("diffusion_n{n}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["p", "src", "coef"])?;
        for e in diffusion_table(n) {
            w.write_record([e.p.to_string(), e.src.to_string(), e.coef.to_string()])?;
        }
        w.flush()?;
        written.push(path);

        let path = dir.join(format!("drift_n{n}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["p", "grad", "src", "coef"])?;
        for e in drift_table(n) {
            w.write_record([e.p.to_string(), ["11", "12", "21", "22"][e.grad].to_string(), e.src.to_string(), e.coef.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }
    let path = dir.join("quartic.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["x_index", "y_index", "m4_component"])?;
    for (a, b, p) in quartic_table() {
        w.write_record([a.to_string(), b.to_string(), p.to_string()])?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}
