//! Exact classical simulation of boson-sampling variants.
//!
//! The crate covers three photonic sampling protocols (standard boson
//! sampling with Fock inputs, scattershot boson sampling with heralded
//! two-mode squeezed sources, and Gaussian boson sampling with single-mode
//! squeezed inputs) together with the tooling needed to study them at desk
//! scale:
//!
//! - [`matkernels`]: permanents, Hafnians and dense linear algebra.
//! - [`circuits`]: Haar-random and coupled-waveguide interferometers.
//! - [`gaussian`]: squeezed-state covariances and loss channels.
//! - [`distributions`]: exact output laws for the ideal and adversarial
//!   models, pattern enumeration and seeded sampling.
//! - [`validation`]: Bayesian model comparison, row-norm and likelihood-ratio
//!   tests over recorded samples.
//! - [`vibronic`]: Franck-Condon profiles through the Doktorov decomposition.
//! - [`scaling`]: event-rate, signal-to-noise and loss studies.
//!
//! Every probability in the crate is computed exactly (up to floating-point
//! rounding) by enumeration; nothing is estimated by Monte Carlo.

pub mod circuits;
pub mod distributions;
pub mod error;
pub mod export;
pub mod gaussian;
pub mod matkernels;
pub mod scaling;
pub mod validation;
pub mod vibronic;

pub use error::{Error, Result};
pub use matkernels::{ComplexMatrix, FockPattern};

pub use num_complex::Complex64 as C64;
