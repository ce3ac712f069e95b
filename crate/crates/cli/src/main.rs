use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rodsim_cli::check::check_snapshot;
use rodsim_cli::converge::{convergence_study, Axis};
use rodsim_cli::runner::{simulate, RunStatus, VERSION};
use rodsim_cli::sweep::sweep_eta;
use rodsim_cli::tables::write_tables;
use rodsim_cli::{exit, load_config, CliError, Result};

#[derive(Parser)]
#[command(name = "rodsim", version = VERSION, about = "Rigid rod suspensions on the periodic square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        config: PathBuf,
        /// Output directory; overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent runs over several values of eta.
    Sweep {
        config: PathBuf,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        eta: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Self-convergence along dt, grid, J or ell.
    Converge {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a snapshot and audit its stress identities.
    Check {
        snapshot: PathBuf,
        /// Viscous-stress parameter used by the audits.
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// Export the moment-equation coefficient tables as CSV.
    Tables {
        #[arg(long, default_value = "tables")]
        out: PathBuf,
    },
}

fn out_dir(given: Option<PathBuf>, cfg: &rodsim_cli::RunConfig) -> PathBuf {
    given.unwrap_or_else(|| cfg.output.dir.clone())
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out, &cfg);
            let report = simulate(&cfg, Some(&dir))?;
            println!("{}: {} steps to t = {}", report.summary.status, report.summary.steps, report.summary.t_final);
            Ok(match report.status {
                RunStatus::Completed => exit::OK,
                RunStatus::Blowup(_) | RunStatus::Aborted(_) => exit::BLOWUP,
            })
        }
        Command::Sweep { config, eta, out } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out, &cfg);
            let rows = sweep_eta(&cfg, &eta, Some(&dir))?;
            for r in &rows {
                println!("eta = {:<8} {}", r.eta, r.status);
            }
            Ok(if rows.iter().all(|r| r.ok()) { exit::OK } else { exit::BLOWUP })
        }
        Command::Converge { config, axis, values, out } => {
            let cfg = load_config(&config)?;
            let axis: Axis = axis.parse()?;
            let dir = out_dir(out, &cfg);
            for r in convergence_study(&cfg, axis, &values, Some(&dir))? {
                println!("{axis} = {:<10} difference {:.6e}  order {:.3}", r.value, r.difference, r.order);
            }
            Ok(exit::OK)
        }
        Command::Check { snapshot, eta } => {
            let report = check_snapshot(&snapshot, eta)?;
            for line in report.lines() {
                println!("{line}");
            }
            if report.closes() {
                Ok(exit::OK)
            } else {
                Err(CliError::Closure(format!("{}: a split does not close", snapshot.display())))
            }
        }
        Command::Tables { out } => {
            for p in write_tables(Path::new(&out))? {
                println!("{}", p.display());
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
