//! Wideband sonar classification of two-layer spherical targets.
//!
//! The crate covers the whole chain from physics to labels:
//!
//! * [`physics`]: partial-wave form function of a fluid-filled elastic shell
//!   (and the rigid sphere used as a reference case),
//! * [`signal`]: chirp generation, real transforms and matched filtering,
//! * [`synth`]: tank-like recordings built from a form function plus direct
//!   arrival, clutter and noise, and labeled datasets of such recordings,
//! * [`inversion`]: matched-filter segmentation, range and form-function
//!   estimation,
//! * [`features`]: the form-function, frequency and time descriptors,
//! * [`classify`]: MLP and RBF-SVM classifiers with stratified k-fold
//!   cross-validation.

pub mod classify;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod inversion;
pub mod io;
pub mod physics;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use num_complex::Complex64;
