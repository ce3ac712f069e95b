//! Binary field snapshots.
//!
//! A snapshot is a 64-byte ASCII header
//!
//! ```text
//! DOISPEC1 <kind> <nx> <ny> <nfields> <time>
//! ```
//!
//! padded with spaces, followed by `nfields` blocks of `nx·ny` little-endian
//! f64 values in physical space, row-major (`values[i1·ny + i2]`). The time
//! is written in shortest round-trip exponent form, so it reads back
//! exactly.
//!
//! Field order by kind:
//! - `DA`: u₁, u₂, A₁₁, A₁₂, A₂₂.
//! - `DOI`: u₁, u₂, then Re ĉⱼ, Im ĉⱼ for j = 0..=J, so J = nfields/2 − 2.
//!
//! Loading transforms back to spectral space and applies the grid's
//! dealiasing rule, which removes round-off left outside the band.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::da::DAState;
use crate::doi::{AngularDistribution, DoiState};
use crate::error::{Error, Result};
use crate::field::{ComplexField, ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid;

pub const MAGIC: &str = "DOISPEC1";
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotKind {
    Da,
    Doi,
}

impl SnapshotKind {
    fn tag(self) -> &'static str {
        match self {
            SnapshotKind::Da => "DA",
            SnapshotKind::Doi => "DOI",
        }
    }
}

impl fmt::Display for SnapshotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub nx: usize,
    pub ny: usize,
    pub time: f64,
    pub fields: Vec<Vec<f64>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

impl Snapshot {
    pub fn from_da(state: &DAState) -> Self {
        let g = state.grid();
        let fields = [&state.u.u1, &state.u.u2, state.a.t11(), state.a.t12(), state.a.t22()]
            .iter()
            .map(|f| f.values())
            .collect();
        Snapshot { kind: SnapshotKind::Da, nx: g.nx(), ny: g.ny(), time: state.t, fields }
    }

    pub fn from_doi(state: &DoiState) -> Self {
        let g = state.grid();
        let mut fields = vec![state.u.u1.values(), state.u.u2.values()];
        for m in state.f.modes() {
            let v = m.values();
            fields.push(v.iter().map(|c| c.re).collect());
            fields.push(v.iter().map(|c| c.im).collect());
        }
        Snapshot { kind: SnapshotKind::Doi, nx: g.nx(), ny: g.ny(), time: state.t, fields }
    }

    /// Angular cutoff J of a kinetic snapshot.
    pub fn order(&self) -> Option<usize> {
        (self.kind == SnapshotKind::Doi).then(|| self.fields.len() / 2 - 2)
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if (grid.nx(), grid.ny()) != (self.nx, self.ny) {
            return Err(bad(format!(
                "snapshot is {}x{}, grid is {}x{}",
                self.nx,
                self.ny,
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(())
    }

    fn scalar(&self, grid: &Grid, i: usize) -> ScalarField {
        ScalarField::from_values(grid, &self.fields[i]).dealias()
    }

    pub fn to_da(&self) -> Result<DAState> {
        self.to_da_on(&Grid::new(self.nx, self.ny)?)
    }

    pub fn to_da_on(&self, grid: &Grid) -> Result<DAState> {
        if self.kind != SnapshotKind::Da {
            return Err(bad(format!("expected a DA snapshot, found {}", self.kind)));
        }
        self.check_grid(grid)?;
        let s = |i| self.scalar(grid, i);
        DAState::new(VectorField::new(s(0), s(1)), TensorField2x2::symmetric(s(2), s(3), s(4)), self.time)
    }

    pub fn to_doi(&self) -> Result<DoiState> {
        self.to_doi_on(&Grid::new(self.nx, self.ny)?)
    }

    pub fn to_doi_on(&self, grid: &Grid) -> Result<DoiState> {
        if self.kind != SnapshotKind::Doi {
            return Err(bad(format!("expected a DOI snapshot, found {}", self.kind)));
        }
        self.check_grid(grid)?;
        let modes = (2..self.fields.len())
            .step_by(2)
            .map(|i| ComplexField::from_parts(&self.scalar(grid, i), &self.scalar(grid, i + 1)))
            .collect();
        let u = VectorField::new(self.scalar(grid, 0), self.scalar(grid, 1));
        DoiState::new(u, AngularDistribution::new(modes)?, self.time)
    }

    fn header(&self) -> Result<Vec<u8>> {
        let text = format!("{MAGIC} {} {} {} {} {:e}", self.kind, self.nx, self.ny, self.fields.len(), self.time);
        if text.len() > HEADER_LEN {
            return Err(bad("header does not fit in 64 bytes"));
        }
        let mut h = text.into_bytes();
        h.resize(HEADER_LEN, b' ');
        Ok(h)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.header()?)?;
        for f in &self.fields {
            let mut buf = Vec::with_capacity(8 * f.len());
            for v in f {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut h = [0u8; HEADER_LEN];
        r.read_exact(&mut h)?;
        let text = std::str::from_utf8(&h).map_err(|_| bad("header is not ASCII"))?;
        let tok: Vec<&str> = text.split_whitespace().collect();
        if tok.len() != 6 || tok[0] != MAGIC {
            return Err(bad(format!("malformed header {:?}", text.trim_end())));
        }
        let kind = match tok[1] {
            "DA" => SnapshotKind::Da,
            "DOI" => SnapshotKind::Doi,
            other => return Err(bad(format!("unknown kind {other}"))),
        };
        let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(format!("bad {what} {s:?}")));
        let (nx, ny, nfields) = (num(tok[2], "nx")?, num(tok[3], "ny")?, num(tok[4], "nfields")?);
        let time: f64 = tok[5].parse().map_err(|_| bad(format!("bad time {:?}", tok[5])))?;
        let expected = match kind {
            SnapshotKind::Da => nfields == 5,
            SnapshotKind::Doi => nfields >= 4 && nfields % 2 == 0,
        };
        if !expected {
            return Err(bad(format!("{nfields} fields is inconsistent with kind {kind}")));
        }
        let n = nx.checked_mul(ny).ok_or_else(|| bad("grid too large"))?;
        let mut fields = Vec::with_capacity(nfields);
        let mut buf = vec![0u8; 8 * n];
        for _ in 0..nfields {
            r.read_exact(&mut buf)?;
            fields.push(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect());
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(bad("trailing bytes after the last field"));
        }
        Ok(Snapshot { kind, nx, ny, time, fields })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn is_finite(&self) -> bool {
        self.fields.iter().flatten().all(|v| v.is_finite())
    }
}
