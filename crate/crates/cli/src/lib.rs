//! Scenario runner for the `pwphase` recovery pipeline.

// `!(x > 0.0)` style guards are kept because they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod scenario;
pub mod sweep;

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or inconsistent configuration (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pwphase::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            _ => 1,
        }
    }
}
