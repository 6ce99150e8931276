//! Command-line front end for the `ipdhg` solvers: flat configs, single runs,
//! sweeps and theory checks.

pub mod commands;
pub mod config;

pub use commands::{cmd_compare, cmd_oracle, cmd_solve, cmd_validate, cmd_validate_pair, CliError};
pub use config::{RawConfig, RunConfig};
