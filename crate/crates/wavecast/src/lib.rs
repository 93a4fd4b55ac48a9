//! File formats, experiment plumbing and the command line around
//! [`wavecast_core`].
//!
//! - [`dataset`]: loading and validating 49-column wave-farm site files
//! - [`config`]: `key = value` experiment files
//! - [`artifact`]: saving, reloading and comparing trained runs
//! - [`farmio`]: climate, layout, coefficient and landscape CSVs
//! - [`experiment`]: training, evaluation and tuning on top of the core crate
//! - [`cli`]: the `wavecast` binary

pub mod artifact;
pub mod cli;
pub mod config;
mod csvutil;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod farmio;

pub use error::{AppError, AppResult};
