//! Configuration, sweep orchestration and CSV output for `frackappa`.

pub mod check;
pub mod config;
pub mod sweep;

pub use config::{validate_config, ConfigError, RunConfig};
pub use sweep::{run_sweep, SweepRow};
