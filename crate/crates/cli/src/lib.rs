//! Command-line front end for `linhsic`: CSV ingestion, the four
//! subcommands, and JSON/CSV output.
//!
//! Exit codes: 0 when the command completed (whatever the test decision),
//! 2 for input or configuration errors, 3 for numerical failures.

pub mod args;
pub mod commands;
pub mod data;
pub mod design;
pub mod error;

pub use error::{CliError, Result};

use args::{Cli, Command};

/// Runs one parsed invocation and returns its rendered output.
pub fn execute(cli: &Cli) -> Result<Vec<u8>> {
    match &cli.command {
        Command::Test(a) => commands::cmd_test(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Power(a) => commands::cmd_power(a),
        Command::Contrast(a) => commands::cmd_contrast(a),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let bytes = execute(cli)?;
    let out = match &cli.command {
        Command::Test(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::Power(a) => &a.output,
        Command::Contrast(a) => &a.output,
    };
    commands::emit(out.out.as_deref(), &bytes)
}
