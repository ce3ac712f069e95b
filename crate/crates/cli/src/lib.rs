//! Configuration, run orchestration and experiment drivers for the
//! `rodsim` command.

pub mod check;
pub mod config;
pub mod converge;
pub mod error;
pub mod runner;
pub mod sweep;
pub mod tables;

pub use config::{load_config, RunConfig};
pub use error::{exit, CliError, Result};
pub use runner::{simulate, RunReport, RunStatus, State};
