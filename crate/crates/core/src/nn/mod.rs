//! A small deterministic neural-network engine.
//!
//! Dense and 1-D convolution layers, the activations the models need,
//! BCE/MSE losses, reverse-mode gradients and Adam. Everything runs in
//! `f64` on a single thread; networks are plain values.

mod activation;
mod adam;
mod gradcheck;
mod layer;
mod loss;
mod network;

pub use activation::{sigmoid, softsign, Activation};
pub use adam::{Adam, DEFAULT_LEARNING_RATE};
pub use gradcheck::grad_check;
pub use layer::{Layer, LayerKind, LayerSpec};
pub use loss::{LossKind, BCE_CLAMP};
pub use network::Network;
