//! Privacy-preserving distributed maximum consensus.
//!
//! The maximum of the nodes' private values is computed as the solution of a
//! linear program solved with the inequality-constrained primal-dual method of
//! multipliers (PDMM) on an augmented graph. Every regular node `i` gets a
//! private dummy node `i'` that carries the constraint `x_i >= s_i`; the
//! auxiliary variables on the dummy edge are randomly initialized, which hides
//! `s_i` from passive (corrupt node) and eavesdropping adversaries while the
//! iterates still converge to the exact maximum.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats and the
//! experiment harness live in the `maxcons` crate.
//!
//! Node indices are 0-based throughout this crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod baselines;
pub mod diagnostics;
pub mod engine;
mod error;
pub mod graph;
pub mod privacy;
pub mod problem;
mod rng;

pub use error::Error;
pub use rng::seeded_rng;

pub type Result<T, E = Error> = core::result::Result<T, E>;
