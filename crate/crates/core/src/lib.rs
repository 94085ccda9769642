//! Simulation and numerical verification of the critical `(d, alpha, beta)`
//! branching particle system and its sub-fractional stable occupation-time
//! limit.

pub mod acceptance;
pub mod branching_law;
pub mod codifference;
pub mod error;
pub mod harness;
pub mod limit_process;
pub mod model;
pub mod numerics;
pub mod particle_system;
pub mod rng;
pub mod stable_density;
pub mod stable_sampling;

pub use error::{Error, Result};
pub use model::{ModelParams, TestFunction, TimeProfile};
pub use rng::RngStream;
