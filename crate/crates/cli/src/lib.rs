//! Driver behind the `amg` binary: recipes, runs and reports.

pub mod config;
pub mod report;
pub mod run;
