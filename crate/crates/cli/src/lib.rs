//! Configuration loading, subcommands and CSV output for the `checkmark` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use commands::{run, Benchmark, Command, Report, SweepParameter};
pub use config::{load_config, parse_config, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] checkmark_core::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration and usage problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Model(checkmark_core::Error::InvalidParameter { .. }) => 2,
            CliError::Model(checkmark_core::Error::Precondition(_)) => 2,
            _ => 1,
        }
    }
}
