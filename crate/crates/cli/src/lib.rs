//! Config-driven experiment runner for COOL networks.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::{Experiment, RunConfig};
pub use error::{CliError, Result};
pub use manifest::RunManifest;
pub use run::{execute, prepare, Outcome, Overrides};
