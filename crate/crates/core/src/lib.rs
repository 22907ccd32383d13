//! Cognitive angular-diversity automatic target recognition.
//!
//! The crate is split along the processing chain:
//!
//! - [`scene`]: surrogate targets and bistatic stepped-frequency returns
//! - [`dsp`]: range profiles and normalized magnitude features
//! - [`classifier`]: sectored naive-Gaussian template bank
//! - [`cognition`]: the vote-gated, azimuth-stepping perspective loop
//! - [`harness`]: datasets, Monte Carlo sweeps and CSV output
//! - [`config`]: the experiment configuration file format

pub mod classifier;
pub mod cognition;
pub mod config;
pub mod dsp;
mod error;
pub mod harness;
pub mod scene;
pub mod seed;

pub use error::{Error, Result};
pub use scene::TargetClass;
