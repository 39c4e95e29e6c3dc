//! Pure algorithmic core for fairness-aware county risk classification.
//!
//! Everything here is `no_std` with `alloc`: binarization and splitting,
//! correlation and density summaries, five weight-aware classifiers, group
//! fairness metrics with the reweighing transform, a synthetic data oracle,
//! and the experiment grid that ties them together. File formats, the CLI and
//! report rendering live in the `riskfair` companion crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod explore;
pub mod fairness;
pub mod matrix;
pub mod models;
pub mod preprocess;
pub mod seed;
pub mod serde_float;
pub mod synth;

mod math;

pub use dataset::TabularDataset;
pub use error::{Error, Result};
pub use matrix::Matrix;
