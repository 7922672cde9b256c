//! File formats and subcommand logic behind the `clfeval` binary.

pub mod commands;
pub mod error;
pub mod formats;

pub use error::{CliError, Result};
