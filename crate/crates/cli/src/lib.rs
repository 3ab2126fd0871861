//! Configuration-driven scenario runner: loads a scenario file, runs the
//! realisation ensemble, solves the game at every sweep point and writes
//! plot-ready CSV reports.

pub mod config;
pub mod error;
pub mod report;
pub mod scenario;

pub use config::{Profile, ScenarioConfig, SweepParam};
pub use error::{CliError, Stage};
pub use report::emit_report;
pub use scenario::{prepare, run_prepared, run_scenario, Outcome, Prepared, ScenarioResult};
