use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    /// The stream function is only defined for mean-free vorticity.
    #[error("vorticity has nonzero mean {mean:e}; the stream-function gauge requires zero mean")]
    GaugeViolation { mean: f64 },

    #[error("need at least {needed} stored states, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("need at least {needed} angular modes, have {have}")]
    InsufficientModes { needed: usize, have: usize },

    #[error("non-finite value in {field} at step {step}")]
    Blowup { step: u64, field: String },

    #[error("structural violation at t = {t}: {what}")]
    StructuralViolation { t: f64, what: String },

    #[error("distribution is negative ({min:e}) beyond tolerance {tol:e}")]
    PositivityViolation { min: f64, tol: f64 },

    #[error("time step {dt:e} exceeds the explicit stability limit {limit:e}")]
    UnstableTimeStep { dt: f64, limit: f64 },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
