//! Command-line front end: BFRS frame files, run configuration, and the
//! `encode`, `channel`, `decode`, `sweep` and `ber` subcommands.

pub mod bfrs;
pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{run, Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("format error: {0}")]
    Format(#[from] bfrs::BfrsError),
    #[error("sync failure: {0}")]
    Sync(screenlink::Error),
    #[error("integrity failure: {0}")]
    Integrity(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Pipeline(#[from] screenlink::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::USAGE,
            CliError::Format(bfrs::BfrsError::Io(_)) => exit::OTHER,
            CliError::Format(_) => exit::FORMAT,
            CliError::Sync(_) => exit::SYNC,
            CliError::Integrity(_) => exit::INTEGRITY,
            CliError::Io { .. } | CliError::Pipeline(_) => exit::OTHER,
        }
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    /// Bad arguments or configuration.
    pub const USAGE: i32 = 2;
    /// Malformed BFRS input.
    pub const FORMAT: i32 = 3;
    /// No preamble lock.
    pub const SYNC: i32 = 4;
    /// CRC mismatch or truncated frame.
    pub const INTEGRITY: i32 = 5;
}
