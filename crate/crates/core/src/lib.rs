//! ConvGeN: convex-space oversampling for imbalanced tabular data.
//!
//! The crate holds the whole pipeline: a small neural-network engine
//! ([`nn`]), dataset loading and stratified folds ([`data`]), exact nearest
//! neighbours ([`neighborhood`]), the ConvGeN model ([`convgen`]), baseline
//! oversamplers ([`baselines`]), downstream classifiers ([`classifiers`]),
//! scores ([`metrics`]), the cross-validation harness ([`harness`]) and a
//! PCA projection for inspecting synthetic data ([`pca`]).
//!
//! Class labels are `u8`: [`data::MINORITY`] (1) and [`data::MAJORITY`]
//! (0). All randomness flows from explicit seeds through [`SplitMix64`].

pub mod baselines;
pub mod classifiers;
pub mod convgen;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod neighborhood;
pub mod nn;
pub mod pca;
pub mod rng;
pub mod tensor;

pub use convgen::{ConvGenConfig, ConvGenModel, SimplexMatrix, SyntheticBatch};
pub use data::{Dataset, MAJORITY, MINORITY};
pub use error::{Error, Result};
pub use rng::{derive_seed, SplitMix64};
pub use tensor::Tensor2D;
