//! Gradient, Skorohod integral, covariant derivative and operator powers on
//! cylindrical functionals of the Poisson measure.

pub mod edgeworth;
pub mod fixtures;
pub mod functional;
pub mod powers;
pub mod process;

pub use edgeworth::{edgeworth_residual, EdgeworthReport, TestFunction};
pub use functional::{gradient_d, CylindricalFunctional, SmoothMap};
pub use powers::{
    commutation_check, covariant_nabla_deterministic, gamma_deterministic, gamma_sequence, moment_identity,
    moment_identity_grid, operator_power_apply, transport, CommutationCheck, GammaCheck, MomentCheck,
    TransportPlan,
};
pub use process::{duality_check, skorohod, DualityPair, DualityReport, SimpleProcess};
