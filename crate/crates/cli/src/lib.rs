//! Library surface of the configuration-driven runner, shared by the binary
//! and the acceptance tests.

pub mod config;
pub mod runner;
pub mod sweep;

pub use config::{parse_config, ConfigError, RunConfig};
pub use runner::{run, RunArtifacts, RunError};
