//! Command-line driver for the vortex spectral library: configuration, caches,
//! CSV/JSON I/O and the verification suite.

pub mod cache;
pub mod commands;
pub mod config;
pub mod io;
pub mod verify;

use thiserror::Error;

pub const CODE_VERSION: &str = concat!("vortex/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("input: {0}")]
    Input(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("{0}")]
    ExcludedNode(String),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Io(_) => "io",
            Self::Cache(_) => "cache",
            Self::Numerical(_) => "numerical",
            Self::Input(_) => "input",
            Self::GridMismatch(_) => "grid_mismatch",
            Self::ExcludedNode(_) => "excluded_node",
            Self::Usage(_) => "usage",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m)
            | Self::Io(m)
            | Self::Cache(m)
            | Self::Numerical(m)
            | Self::Input(m)
            | Self::GridMismatch(m)
            | Self::ExcludedNode(m)
            | Self::Usage(m) => m,
        }
    }

    /// `{"error": {"kind": .., "message": ..}}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.message() } })
    }
}
