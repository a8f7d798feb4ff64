//! Batch evaluation of ECG reasoning traces: manifests, run modes,
//! provider clients and report emission.

pub mod cli;
pub mod config;
pub mod emit;
pub mod manifest;
pub mod provider;
pub mod report;
pub mod runner;
pub mod split;
pub mod stats;
pub mod synth;
