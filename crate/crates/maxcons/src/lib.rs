//! File formats, experiment orchestration and reproducibility manifests for
//! the `maxcons-core` simulator.
//!
//! Node indices are 1-based in every file this crate reads or writes.

pub mod config;
pub mod experiments;
pub mod io;
pub mod manifest;

pub use maxcons_core as core;
