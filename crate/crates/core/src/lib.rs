//! Simulation and mean-field analysis of spatially extended nonlinear Hawkes
//! networks with exponential memory.
//!
//! * [`model`]: parameter catalog with analytic constants.
//! * [`hawkes_sim`]: exact event-driven simulation of the finite network.
//! * [`limit_field`]: limit intensity, neural field and limit Poisson processes.
//! * [`quantize`]: deterministic position sets with certified Wasserstein rates.
//! * [`transport`]: exact discrete transport, pathwise coupling and distance bounds.
//! * [`experiments`]: configuration, studies and reproducible output.

pub mod error;
pub mod experiments;
pub mod hawkes_sim;
pub mod limit_field;
pub mod model;
pub mod quantize;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
