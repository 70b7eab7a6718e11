//! Experiment harness around the `tropgeom` library: dequantization field
//! grids, Minkowski vertex scaling, region-count scaling, stability
//! certification, and lower-bound verification. Every experiment is fully
//! determined by its configuration and seed; reruns produce byte-identical
//! data files at any thread count.

use thiserror::Error;

pub mod config;
pub mod field;
pub mod io;
pub mod lower_bound;
pub mod minkowski;
pub mod region;
pub mod stability_cmd;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl CliError {
    /// Process exit code: 1 for usage/IO problems, 2 for violated bounds.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Assertion(_) => 2,
        }
    }
}
