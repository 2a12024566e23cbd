//! Experiment runner library behind the `trap-model` binary: configuration,
//! deterministic replica orchestration, reports, plots, and the experiment
//! implementations themselves.

pub mod config;
pub mod experiments;
pub mod par;
pub mod report;
pub mod svg;
