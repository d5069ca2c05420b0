//! Simulation and verification toolkit for super-Brownian motion in a
//! random environment: correlated noise, heat-kernel analysis, SPDE
//! solvers, the branching particle system, Feynman–Kac oracles and the
//! dual process.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`.

pub mod covariance;
pub mod dual;
mod error;
pub mod exec;
pub mod feynmankac;
pub mod heatkernel;
pub mod particles;
pub mod readout;
pub mod rng;
mod scalar;
pub mod spde;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Executor;
pub use scalar::{dist2, norm2, Scalar};
pub use stats::Estimate;

pub type Kernel = covariance::CovarianceKernel<f64>;
pub type Grid = heatkernel::Torus<f64>;
pub type Field = heatkernel::GridFunction<f64>;
pub type Factor = covariance::GridFactor<f64>;
pub type Noise = spde::NoisePath<f64>;
pub type Population = particles::ParticlePopulation<f64>;
pub type ReadoutFn = readout::Readout<f64>;
