//! `nearfield` command-line front end: argument definitions, the run report
//! every subcommand prints, and [`run`].

pub mod args;
mod commands;
pub mod error;
pub mod report;

pub use args::{Cli, Command};
pub use error::CliError;
pub use report::{ConfigDigest, RunReport, TimingStats};

/// Runs one subcommand. The report's `exit_status` is left at 0; failures
/// come back as [`CliError`] and carry their own exit code.
pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Detect(a) => commands::detect::run(a),
        Command::Height(a) => commands::height::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
        Command::Gen(a) => commands::gen::run(a),
        Command::Decide(a) => commands::decide::run(a),
        Command::Calibrate(a) => commands::calibrate::run(a),
    }
}
