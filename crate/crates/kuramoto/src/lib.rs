//! File formats, configuration and the command-line front end for
//! `kuramoto-core`.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numerical failure
//! (blow-up, divergence, inconclusive stability), 1 I/O.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;

pub use commands::{dispatch, Command};
pub use config::{parse_config, RunConfig};
pub use error::CliError;
