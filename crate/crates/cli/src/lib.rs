//! The `ptqgt` command-line tool: phase-diagram scans, model files, geometric probes and
//! self-checks on top of `ptqgt-core`.

pub mod commands;
pub mod config;
pub mod model_file;
pub mod scan;
pub mod verify;
