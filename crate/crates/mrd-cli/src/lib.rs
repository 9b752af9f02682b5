//! Harness library behind the `mrd` binary: configuration, image and map
//! I/O, scene evaluation, rendering.

pub mod config;
pub mod evalrun;
pub mod imgio;
pub mod maps;
pub mod render;
pub mod retrieve;
pub mod scene;

use thiserror::Error;

/// CLI failures, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or undecodable image (exit 2).
    #[error("image error: {0}")]
    Image(String),
    /// A provider could not be reached or violated the protocol (exit 3).
    #[error("provider error: {0}")]
    Provider(String),
    /// Invalid configuration, preset, or input document (exit 4).
    #[error("config error: {0}")]
    Config(String),
    /// Anything else (exit 1).
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Image(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Config(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}
