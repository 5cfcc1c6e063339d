//! Library side of the `extr` binary: argument definitions, configuration
//! resolution and one function per subcommand.

pub mod args;
pub mod commands;
pub mod config;
mod error;
mod fsio;

pub use error::{CliError, CliResult};
pub use fsio::write_atomic;
