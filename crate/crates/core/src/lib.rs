//! Dimension spectra of non-autonomous conformal iterated function systems.
//!
//! Systems are given by their contraction ratios level by level. The crate
//! computes pressure functions and their zeros (Hausdorff, box and packing
//! dimension estimates), intermediate dimension spectra through an exact
//! minimum-cost cut-set recursion, truncations of infinite systems, and
//! one-dimensional realizations that serve as empirical cross-checks.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutset;
pub mod error;
pub mod geometry;
pub mod infinite;
pub mod logspace;
pub mod pressure;
pub mod roots;
pub mod scalar;
pub mod special;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type System = system::SystemSpec<f64>;
pub type Level = system::LevelSpec<f64>;
