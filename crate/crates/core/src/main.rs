use std::process::ExitCode;

use clap::Parser;

use bkp_npoint::cli::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
