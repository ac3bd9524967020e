//! Disentangling camera motion from object motion in per-pixel temporal
//! attention, and composing the extracted camera motions.
//!
//! The pipeline works on [`AttentionStack`]s: one `t x t` row-stochastic
//! matrix per pixel, captured from a video model's temporal attention.
//!
//! * [`poisson`] completes the attention under a foreground mask from its
//!   surroundings (one source video).
//! * [`fewshot`] finds the motion common to several videos by clustering
//!   windowed per-pixel attention.
//! * [`combine`] mixes, regionally assigns and applies camera motions.
//! * [`synth`] renders scenes with known camera and object motion, which is
//!   how everything above is checked.

// `!(x > 0.0)` is how validation rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combine;
pub mod error;
pub mod fewshot;
pub mod metrics;
pub mod poisson;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{AttentionStack, Mask2D, MaskStack, Tensor, TensorKind, ValueTensor};
