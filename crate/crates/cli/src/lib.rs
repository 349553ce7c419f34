//! Command-line front end and HTTP service for the `pptree` library.

pub mod commands;
pub mod server;
mod table;

pub use commands::{run, Cli};
