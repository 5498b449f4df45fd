//! File formats and commands behind the `xlmimo` binary.
//!
//! * [`scenario_file`]: the sectioned scenario format and its environment
//!   overrides.
//! * [`files`]: CSV readers and writers for IF matrices, maps and
//!   signature tables.
//! * [`report`]: the JSON run report written next to estimates.
//! * [`bench`]: Monte-Carlo sweeps.
//! * [`commands`]: the `synth`, `map`, `estimate` and `bench` subcommands.

use std::path::PathBuf;

use thiserror::Error;

pub mod bench;
pub mod commands;
pub mod files;
pub mod report;
pub mod scenario_file;

pub use scenario_file::{ParseError, ScenarioFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {err}", .path.display())]
    Parse { path: PathBuf, err: ParseError },
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for parse and configuration errors, 3 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            err: ParseError {
                line,
                source_name: None,
                message: message.into(),
            },
        }
    }
}
