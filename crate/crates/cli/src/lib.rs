//! Experiment harness around the rod-transport simulation core: scenario
//! files with sensible defaults, seeded single trials, paired-seed batch
//! comparisons across control strategies, and plain-text exports.

pub mod export;
pub mod runner;
pub mod scenario;

pub use runner::{run_batch, run_trial, BatchResult, BatchSummary, StrategyStats, TrialRow};
pub use scenario::{load_scenario, Scenario};
