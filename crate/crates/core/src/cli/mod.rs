//! Command-line front end: config parsing, presets and sweep runner.

pub mod config;
pub mod expr;
pub mod preset;
pub mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::selftest;

pub use config::{parse_config, ExperimentSpec};
pub use preset::Preset;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_SELFTEST: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "kdcoll", version, about = "Qubit collision models with Kirkwood-Dirac quasiprobabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in experiment (fig1 .. fig7, custom).
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset's config instead of running it.
        #[arg(long)]
        show: bool,
    },
    /// Parse and check a config file without running it.
    Validate { config: PathBuf },
    /// Run the acceptance criteria.
    Selftest,
}

fn load(path: &PathBuf) -> Result<ExperimentSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn execute(spec: ExperimentSpec, out: Option<PathBuf>) -> Result<(), Error> {
    let path = out.unwrap_or_else(|| run::default_out(&spec));
    log::info!("running {} ({} rows)", spec.preset.name(), spec.row_count());
    let table = run::run(&spec)?;
    run::write_outputs(&spec, &table, &path)?;
    println!(
        "wrote {} rows to {} (metadata in {})",
        table.rows.len(),
        path.display(),
        run::meta_path(&path).display()
    );
    Ok(())
}

/// Runs a parsed command and maps failures to exit codes.
pub fn dispatch(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run { config, out } => load(&config).and_then(|spec| execute(spec, out)),
        Command::Preset { name, out, show } => match Preset::from_name(&name) {
            None => {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                Err(Error::InvalidConfig {
                    field: "preset",
                    reason: format!("unknown preset '{name}', expected one of {}", names.join(", ")),
                })
            }
            Some(p) if show => {
                print!("{}", p.spec().to_config_string());
                Ok(())
            }
            Some(p) => execute(p.spec(), out),
        },
        Command::Validate { config } => load(&config).map(|spec| {
            println!(
                "ok: preset {}, {} sweep axes, {} rows",
                spec.preset.name(),
                spec.sweep.len(),
                spec.row_count()
            );
        }),
        Command::Selftest => {
            let results = selftest::run_all();
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            return if failed == 0 {
                ExitCode::from(EXIT_OK)
            } else {
                ExitCode::from(EXIT_SELFTEST)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
