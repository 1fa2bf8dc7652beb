//! Config-driven runner for FEC performance experiments.
//!
//! Every subcommand reads an optional TOML configuration, applies flag
//! overrides and writes its results plus a `manifest.json` that records the
//! resolved configuration and the SHA-256 of every result file.

pub mod args;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use args::Cli;
pub use config::Config;
pub use error::CliError;
pub use output::Manifest;
