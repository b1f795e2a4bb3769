//! Configuration, CSV output and subcommands behind the `tmfe` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{BoundArgs, Session};
pub use config::Config;
