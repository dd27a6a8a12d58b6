//! Configuration, command execution and reporting for the `ecomdo` tool.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, ConfigError, RunConfig};
pub use run::{run_command, CliError, Command, Outcome, RunOptions};
