//! Scenario files, run orchestration and deterministic exports for the
//! `windfront` command-line tool.

pub mod export;
pub mod queries;
pub mod run;
pub mod scenario;

pub use run::{execute, run_scenario, Report, RunError};
pub use scenario::{Scenario, ScenarioError, ValidationError};
