//! Orchestration for the `gss` binary: benchmark generation, sample
//! collection, scoring and evaluation, each run leaving a manifest next to
//! its outputs.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 transport, 5 numeric.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use args::{Cli, Command};
pub use commands::run;
pub use config::parse_args;
pub use error::{exit, CliError};
pub use manifest::{FileEntry, OutputLock, RunContext, RunManifest};
