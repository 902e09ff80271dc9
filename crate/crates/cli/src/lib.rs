//! Library half of the `magnon` command-line tool.

mod args;
mod commands;
pub mod config;
mod error;
mod output;

pub use args::{Cli, Command, CommonArgs};
pub use commands::run;
pub use error::{CliError, CliResult};
pub use output::Artifact;
