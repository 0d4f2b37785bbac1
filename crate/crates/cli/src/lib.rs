//! Command-line front end of `trampoline-core`: configuration, subcommands,
//! file formats and run manifests.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::CliError;
