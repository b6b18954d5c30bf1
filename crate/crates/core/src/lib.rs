//! Counterfactual recourse under predictive multiplicity.
//!
//! The crate is `no_std` with `alloc`. It holds the numerical core:
//!
//! - tabular data: [`schema`], [`dataset`], [`percentile`], [`synth`]
//! - scorers and ε-level sets: [`classifier`]
//! - a heterogeneous-likelihood autoencoder: [`autoencoder`]
//! - counterfactual generators: [`engine`]
//! - costs, transferability and cost bounds: [`analytics`]
//!
//! File formats, experiment orchestration and the HTTP facade live in the
//! `recourse-tools` crate.

#![no_std]
// `!(a > b)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod autoencoder;
pub mod classifier;
pub mod dataset;
pub mod engine;
mod error;
pub mod linalg;
pub mod math;
pub mod pca;
pub mod percentile;
pub mod rng;
pub mod schema;
pub mod synth;

pub use error::{Error, Result};
