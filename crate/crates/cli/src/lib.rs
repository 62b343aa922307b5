//! Command-line front end: argument parsing, config merging, reports and
//! the parallel gap sweep.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use args::Cli;
pub use commands::{execute, run, Outcome};
pub use error::{CliError, CliResult};
