//! Experiment harness for the Allen-Cahn IP-DG solver: configuration
//! parsing, the initial-condition library, and the experiment drivers
//! behind the `acdg` command-line tool.

pub mod config;
pub mod experiments;
pub mod initial;

pub use config::{parse_config, parse_config_file, InitialCondition, RunConfig};
