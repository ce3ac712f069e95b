//! Validation of an emitted snapshot: format, finiteness, and the four
//! cancellation audits on the stored state.

use std::path::Path;

use rodsim_core::da;
use rodsim_core::diagnostics::{
    cancellation_split_da, cancellation_split_da_high, cancellation_split_doi, cancellation_split_doi_high,
    CancellationSplit, CLOSURE_TOL,
};
use rodsim_core::moments::{toeplitz_realizability, trig_moments, PSD_TOL};
use rodsim_core::snapshot::{Snapshot, SnapshotKind};

use crate::error::{CliError, Result};

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub kind: SnapshotKind,
    pub time: f64,
    pub splits: Vec<(&'static str, CancellationSplit)>,
    /// Informational lines (structure, realizability).
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn closes(&self) -> bool {
        self.splits.iter().all(|(_, s)| s.closes(CLOSURE_TOL))
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!("{} snapshot at t = {}", self.kind, self.time)];
        for (name, s) in &self.splits {
            out.push(format!(
                "{name:<9} lhs {:+.6e}  dissipative {:+.6e}  remainder {:+.6e}  closure {:.1e}  {}",
                s.lhs,
                s.dissipative,
                s.remainder,
                s.closure_error,
                if s.closes(CLOSURE_TOL) { "ok" } else { "FAIL" }
            ));
        }
        out.extend(self.notes.iter().cloned());
        out
    }
}

/// Loads and audits a snapshot. Unreadable or non-finite snapshots are
/// configuration errors; a split that does not close is a closure error.
pub fn check_snapshot(path: &Path, eta: f64) -> Result<CheckReport> {
    let snap = Snapshot::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !snap.is_finite() {
        return Err(CliError::Config(format!("{}: non-finite values", path.display())));
    }
    let (splits, notes) = match snap.kind {
        SnapshotKind::Da => {
            let st = snap.to_da()?;
            let r = da::structural_report(&st.a);
            let notes = vec![format!(
                "structure: max |tr A - 1| {:.2e}, det A in [{:.6e}, {:.6e}], max |A| {:.6e}",
                r.max_trace_dev, r.min_det, r.max_det, r.max_norm
            )];
            let splits = vec![
                ("da", cancellation_split_da(&st.u, &st.a, eta)?),
                ("da_high", cancellation_split_da_high(&st.u, &st.a, eta)?),
            ];
            (splits, notes)
        }
        SnapshotKind::Doi => {
            let st = snap.to_doi()?;
            let order = st.f.order();
            let t = toeplitz_realizability(&trig_moments(&st.f, order)?, order, PSD_TOL)?;
            let notes = vec![format!(
                "realizability: J = {order}, min relative eigenvalue {:.3e}, {} points below tolerance",
                t.min_relative, t.violations
            )];
            let splits = if order >= 4 {
                vec![
                    ("doi", cancellation_split_doi(&st.u, &st.f, eta)?),
                    ("doi_high", cancellation_split_doi_high(&st.u, &st.f, eta)?),
                ]
            } else {
                Vec::new()
            };
            (splits, notes)
        }
    };
    let report = CheckReport { kind: snap.kind, time: snap.time, splits, notes };
    Ok(report)
}
