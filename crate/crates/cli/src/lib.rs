//! Command line front end for `cascade-core`: TOML scenarios in, CSV
//! trajectories and gain reports out.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::CliError;
pub use scenario::Scenario;

/// Environment variable overriding the output root directory.
pub const OUT_DIR_ENV: &str = "CASCADE_OUT_DIR";
