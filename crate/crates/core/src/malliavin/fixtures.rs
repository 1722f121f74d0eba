//! Built-in test cases for the duality and predictability checks. Positions
//! are given for `B(1)` in the plane, scaled by R and padded with zeros in
//! higher dimensions.

use crate::error::Result;
use crate::integrals::ScalarField;
use crate::kernel::KernelEvaluator;
use crate::malliavin::functional::{CylindricalFunctional, SmoothMap};
use crate::malliavin::process::{DualityPair, SimpleProcess};

/// Bump scaled by the kernel's radius so the fixtures follow `B(R)`.
fn bump(ke: &KernelEvaluator, center: [f64; 2], radius: f64, amplitude: f64) -> Result<ScalarField> {
    let r = ke.radius();
    let mut c = crate::geometry::zeros(ke.dim());
    c[0] = center[0] * r;
    c[1] = center[1] * r;
    ScalarField::bump(&c, radius * r, amplitude)
}

/// Two pairs `(u, F)`:
///
/// * `deterministic`: `u = g`, `F = sin <h, γ>` with `h` to the right of `g`;
/// * `anticipating`: `u = g cos <h2, γ>` with `h2` overlapping `g` from the
///   right (so `u` is not predictable), `F = sin <h, γ>`.
pub fn duality_pairs(ke: &KernelEvaluator) -> Result<Vec<DualityPair>> {
    let g = bump(ke, [-0.3, 0.0], 0.5, 2.0)?;
    let h = bump(ke, [0.3, 0.0], 0.5, 2.0)?;
    let first = DualityPair::new(
        "deterministic",
        SimpleProcess::deterministic(ke, g)?,
        CylindricalFunctional::new(SmoothMap::sine(), vec![h])?,
    )?;

    let g2 = bump(ke, [-0.3, 0.2], 0.5, 2.0)?;
    let h2 = bump(ke, [0.35, -0.1], 0.5, 2.0)?;
    let hf = bump(ke, [0.2, 0.3], 0.6, 2.0)?;
    let u = SimpleProcess::new(ke, vec![(g2, CylindricalFunctional::new(SmoothMap::cosine(), vec![h2])?)])?;
    let second = DualityPair::new(
        "anticipating",
        u,
        CylindricalFunctional::new(SmoothMap::sine(), vec![hf])?,
    )?;
    Ok(vec![first, second])
}

/// `u = g cos <h2, γ>` with `supp h2` entirely to the left of `supp g`.
pub fn predictable_process(ke: &KernelEvaluator) -> Result<SimpleProcess> {
    let h2 = bump(ke, [-0.5, 0.0], 0.4, 2.0)?;
    let g = bump(ke, [0.4, 0.0], 0.4, 2.0)?;
    SimpleProcess::new(ke, vec![(g, CylindricalFunctional::new(SmoothMap::cosine(), vec![h2])?)])
}
