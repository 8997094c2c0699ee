//! Memory-accelerated distributed averaging.
//!
//! Standard distributed averaging drives every node of a network toward the
//! global mean through repeated local mixing, x(t+1) = W x(t). This crate
//! implements a two-tap acceleration of that iteration: each node keeps one
//! step of memory and extrapolates through a short linear predictor, which
//! provably squares the convergence exponent on the usual topologies while
//! touching only neighbor state.
//!
//! Module map:
//! - [`graph`]: chain, grid, and random geometric topologies.
//! - [`weights`]: Metropolis-Hastings and max-degree mixing matrices.
//! - [`spectral`]: symmetric eigensolver, augmented-operator spectra, and a
//!   power-law spectral radius estimator.
//! - [`accel`]: predictor parameters, the optimal mixing weight, and the
//!   predicted convergence radius.
//! - [`engine`]: the node-local iteration itself plus experiment traces.
//! - [`doi`]: decentralized estimation of the second eigenvalue, closing the
//!   loop so acceleration needs no global spectral knowledge.

pub mod accel;
pub mod doi;
pub mod engine;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod rng;
pub mod spectral;
pub mod weights;

pub use accel::{AcceleratedOperator, PredictorParams};
pub use doi::{DoiConfig, DoiCost, DoiEstimate, DoiOperator};
pub use engine::{Algo, ExperimentTrace, InitModel, NodeState};
pub use error::{Error, Result};
pub use graph::{Graph, RggSample};
pub use matrix::SquareMatrix;
pub use rng::{derive_seed, rng_from_seed, Rng};
pub use spectral::{PhiSpectrum, Spectrum};
pub use weights::{ConditionReport, WeightMatrix};
