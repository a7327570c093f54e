//! Experiment runner for the birth-and-death correlation dynamics engine:
//! configuration, scenario orchestration, and reproducible reporting.

pub mod compare;
pub mod config;
pub mod report;
pub mod run;
