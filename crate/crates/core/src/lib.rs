//! Synthetic wireless-signal datasets, spectrum representations and a
//! from-scratch convolutional classifier for modulation recognition and
//! cross-technology interference identification.
//!
//! The pipeline is: [`sigsynth`] produces clean complex-baseband waveforms,
//! [`channel`] impairs them, [`dataset`] frames and labels captures,
//! [`transforms`] maps each capture to a 2×N real representation, [`nnet`]
//! trains the classifier and [`eval`] scores it.

pub mod channel;
pub mod dataset;
pub mod eval;
pub mod nnet;
pub mod seed;
pub mod sigsynth;
pub mod transforms;

pub use num_complex::{Complex32, Complex64};
