//! Experiment harness for the policy-zooming agents: TOML configs, seeded
//! sweeps, the rollout oracle for the optimal gain, regret aggregation and
//! CSV/JSON export.

pub mod config;
mod error;
pub mod experiment;
pub mod export;
pub mod oracle;
pub mod report;
pub mod zoom;

pub use config::{ExperimentConfig, OracleBudget, Setup};
pub use error::{HarnessError, Result};
