//! Pipeline driver behind the `heatpanel` binary: configuration handling,
//! staged execution over a panel file, and report serialization.

pub mod config;
pub mod pipeline;
pub mod report;
