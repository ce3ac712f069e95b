use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const BLOWUP: i32 = 3;
    pub const CLOSURE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or unreadable input; names the offending key.
    #[error("config: {0}")]
    Config(String),

    /// The run produced non-finite values or aborted on a structural
    /// violation.
    #[error("run failed: {0}")]
    Blowup(String),

    /// An identity audit did not close.
    #[error("identity check failed: {0}")]
    Closure(String),

    #[error(transparent)]
    Core(#[from] rodsim_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use rodsim_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => exit::CONFIG,
            CliError::Blowup(_) => exit::BLOWUP,
            CliError::Closure(_) => exit::CLOSURE,
            CliError::Core(e) => match e {
                E::Blowup { .. } | E::StructuralViolation { .. } | E::PositivityViolation { .. } | E::UnstableTimeStep { .. } => {
                    exit::BLOWUP
                }
                _ => exit::CONFIG,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
