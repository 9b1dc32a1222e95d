//! Command-line pipeline (`patway`) and the read-only dashboard API.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod server;

pub use commands::{run, Cli};
pub use error::CliError;
