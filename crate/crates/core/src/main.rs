use std::process::ExitCode;

use clap::Parser;
use ebi_core::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EBI_LOG", "error")).init();
    ExitCode::from(run(Cli::parse()))
}
