//! Numerical core for wave-farm power forecasting.
//!
//! Everything in this crate is pure computation over owned buffers: dense
//! tensors with explicit backward passes, the recurrent/convolutional/attention
//! layer family, model assembly and training, regression metrics, black-box
//! hyperparameter search, and a frequency-domain model of a wave energy
//! converter array. The crate is `no_std` and needs only `alloc`; file
//! formats, the CLI and thread pools live in the `wavecast` crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod gradcheck;
pub mod hyperopt;
pub mod layers;
pub mod math;
pub mod metrics;
pub mod model;
pub mod physics;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use num_complex;
pub use tensor::Tensor;
