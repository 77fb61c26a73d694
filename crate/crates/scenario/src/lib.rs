//! Scenario-driven experiments on pinned consensus networks: configuration,
//! execution, CSV/text outputs and comparison reports.

pub mod config;
pub mod output;
pub mod report;
pub mod runner;

pub use config::{ConfigError, GammaPolicy, ScenarioConfig};
pub use output::write_outputs;
pub use report::{compare_report, RunSummary};
pub use runner::{run_scenario, RunResult, ScenarioError, ScenarioOutcome};
