//! Numerical toolkit for normal approximation of compensated Poisson
//! stochastic integrals on balls of R^d.
//!
//! The crate builds a divergence-inverting kernel, uses it to realize the
//! Malliavin gradient, Skorohod integral and covariant derivative on
//! cylindrical functionals, and evaluates Stein-type Wasserstein bounds
//! against Monte Carlo estimates.

pub mod error;
pub mod geometry;
pub mod integrals;
pub mod kernel;
pub mod malliavin;
pub mod montecarlo;
pub mod quadrature;
pub mod sampling;
pub mod stein;

pub use error::{Error, Result};
pub use geometry::Vector;
