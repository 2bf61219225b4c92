//! Structured-matrix formulations of four standard neural layers.
//!
//! Convolution, average pooling, linear recurrence and self-attention
//! are each expressed as an explicit sparse or structured matrix whose
//! product with a flattened input reproduces the layer exactly:
//!
//! * [`conv`] — banded matrices whose rows are shifted copies of a
//!   shared kernel, plus average pooling as a fixed-coefficient band.
//! * [`rnn`] — a block lower-triangular matrix of propagated state
//!   maps that unrolls a linear recurrence in one product.
//! * [`attn`] — a data-dependent third-order tensor for full softmax
//!   attention, and a sparse bilinear form for frozen projections.
//!
//! Everything is checked against direct nested-loop references in
//! [`check`], trained end to end in [`train`], and timed in [`bench`].
//! The `matiso` binary exposes the same entry points on the command
//! line.

pub mod attn;
pub mod bench;
pub mod check;
pub mod cli;
pub mod conv;
pub mod data;
pub mod error;
pub mod mat;
pub mod rnn;
pub mod rng;
pub mod train;

pub use error::{Error, Result};

/// Elementwise nonlinearity applied after a structured-matrix product.
///
/// The matrix formulations cover the linear part of each layer;
/// activations stay outside the matrix and are applied to its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::None => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at `x`. The ramp's kink takes the left value: 0 at 0.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::None => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}
