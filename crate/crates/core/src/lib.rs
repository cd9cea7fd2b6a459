//! Sensitivity, Wasserstein information and Wasserstein projection estimation.
//!
//! Sample points enter estimators additively perturbed; the expected squared
//! gradient of a statistic (its sensitivity) is bounded below by a transport
//! analogue of the Fisher information, and the estimator minimizing the
//! Wasserstein distance to the data attains that bound asymptotically.

pub mod error;
pub mod estimators;
pub mod families;
pub mod harness;
pub mod ot1d;
pub mod quadrature;
pub mod rng;
pub mod sample;
pub mod sdot2d;
pub mod sensitivity;
pub mod wpe;

pub use error::{Error, Result};
