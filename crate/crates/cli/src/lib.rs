//! Scenario configs and the task runner behind the `geomflow` binary.

pub mod config;
pub mod scenario;
