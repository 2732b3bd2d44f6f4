use std::process::ExitCode;

use clap::Parser;
use kdcoll::cli::{dispatch, Cli};

fn main() -> ExitCode {
    // Per-call KDQ regime warnings are summarised by the runner instead.
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,kdcoll::kdq=error")).init();
    dispatch(Cli::parse())
}
