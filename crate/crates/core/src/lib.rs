//! Analysis and simulation of networks of diffusively coupled negative cyclic
//! feedback (Goodwin-type) oscillators.
//!
//! The crate covers:
//!
//! - [`model`]: oscillator parameters, nondimensionalization, coupling Laplacians
//! - [`analysis`]: equilibrium, oscillation and synchronization conditions
//! - [`harmonic`]: describing functions and the harmonic-balance period estimate
//! - [`sim`]: RK4 integration and empirical period/synchrony measurement
//! - [`report`]: the whole pipeline as one serializable report
//! - [`config`], [`tables`], [`sweep`]: configuration files and batch outputs

pub mod analysis;
pub mod config;
pub mod error;
pub mod fmt;
pub mod harmonic;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod report;
pub mod sim;
pub mod sweep;
pub mod tables;
pub mod topology;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{build_laplacian, nondimensionalize, CouplingLaplacian, DimensionalParams, NetworkModel, OscillatorParams};
