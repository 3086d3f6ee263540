//! Command-line front end: file formats, configuration and subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, Result};
