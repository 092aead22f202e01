//! Benchmark harness around the estimation library: configuration parsing,
//! dataset/model management, estimator sweeps, and CSV reporting.

pub mod config;
pub mod csvout;
pub mod harness;
pub mod params;
