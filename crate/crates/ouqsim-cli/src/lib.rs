//! Declarative scenario runner for correlated-noise qubit simulations:
//! parses scenario documents, sweeps the noise correlation parameter through
//! the full noise -> model -> relaxation -> observable pipeline, and persists
//! deterministic results.

pub mod compare;
pub mod runner;
pub mod scenario;

pub use compare::{compare, CompareError};
pub use runner::{parse_manifest, run, run_file, RunError, RunManifest, RunOptions};
pub use scenario::{parse_scenario, Scenario, ScenarioError, Violation};
