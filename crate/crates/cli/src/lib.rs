//! Command-line front end: CSV ingestion, subcommand dispatch and result
//! serialization.

pub mod args;
pub mod commands;
pub mod data;
pub mod error;
pub mod report;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, CliResult};
