//! Command-line front end: job manifests, command drivers and exit codes.

pub mod commands;
pub mod config;
pub mod error;

pub use config::JobConfig;
pub use error::{exit, CliError};
