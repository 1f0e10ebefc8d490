//! Config-driven experiment runner for the frade numerical lab.

pub mod config;
pub mod expr;
mod kinds;
pub mod presets;
pub mod run;

pub use config::{Config, ConfigError};
pub use run::{run_config, run_file, Outcome, RunError};
