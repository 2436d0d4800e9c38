//! Files, sweeps, reports and the command-line surface around `gnnlab-core`.

pub mod clock;
pub mod commands;
pub mod config;
pub mod csvfmt;
pub mod error;
pub mod graph_io;
pub mod manifest;
pub mod report;
pub mod run;
pub mod sweep;

pub use error::{Error, Result};
