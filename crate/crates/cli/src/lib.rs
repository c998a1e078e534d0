//! Command-line front end: configuration, data generation, sampler runs and
//! their on-disk artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod generate;
pub mod output;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
