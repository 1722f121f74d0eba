//! Stein bounds and Wasserstein estimates for the normal approximation of `δ(f)`.

pub mod bounds;
pub mod slope;
pub mod wasserstein;

pub use bounds::{
    classical_bound, classical_components, o1k_bound, third_cumulant_bound, third_cumulant_components,
    BoundComponents, BoundReport, O1kBound,
};
pub use slope::{loglog_slope, SlopeFit};
pub use wasserstein::{mc_distance, w1_to_gaussian, wasserstein_to_gaussian, WassersteinEstimate};
