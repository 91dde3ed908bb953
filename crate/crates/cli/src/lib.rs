//! Batch front end for the pathmon library: spectra, path selection,
//! prediction, spike detection, failure sweeps, synthetic data, and a
//! seeded end-to-end pipeline, each emitting plot-ready CSV files plus a
//! run manifest.

pub mod cli;
pub mod commands;
pub mod emit;
pub mod inputs;
pub mod manifest;

pub use cli::run;
pub use commands::inject_anomalies;
pub use manifest::RunManifest;
