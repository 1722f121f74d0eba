//! Kernel checks: vanishing on the wrong side of the mollifier, the scaled
//! pointwise bound, the operator bound and the divergence identity.

use steinlab_core::geometry::{self, Vector};
use steinlab_core::integrals::ScalarField;
use steinlab_core::kernel::{apply_kernel, operator_constant, verify_divergence_identity};
use steinlab_core::sampling::derive_seed;

use super::{attach_kd, kernel, planar, probe_points, Check, ExperimentResult};
use crate::config::Config;
use crate::error::CliError;

/// Relative tolerance of the operator bound, covering its quadrature error.
const OPERATOR_BOUND_SLACK: f64 = 1e-6;

/// Pairs in `B(R)` ordered so that `x` has the smaller first coordinate.
fn ordered_pairs(dim: usize, radius: f64, n: usize, seed: u64) -> Vec<(Vector, Vector)> {
    let pts = probe_points(dim, radius, 2 * n, seed);
    pts.chunks(2)
        .map(|p| {
            let (a, b) = (p[0].clone(), p[1].clone());
            if a[0] <= b[0] {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

pub fn run_verify_kernel(cfg: &Config) -> Result<ExperimentResult, CliError> {
    cfg.validate_quadrature_dim()?;
    let vk = &cfg.verify_kernel;
    let seed = cfg.mc.master_seed;
    let (dim, r) = (cfg.dim, cfg.radius);
    let mut ke = kernel(cfg, true)?;
    let mut checks = Vec::new();

    let placement = ke.eta().check_placement(r);
    if let Err(e) = &placement {
        log::warn!("{e}");
    }
    checks.push(Check::at_most("eta_placement_violation", f64::from(placement.is_err() as u8), 0.0));

    let pairs = ordered_pairs(dim, r, vk.compat_pairs, derive_seed(seed, 1));
    let mut compat = 0.0f64;
    for (x, y) in &pairs {
        if geometry::distance(x, y) < steinlab_core::kernel::COINCIDENT_TOL {
            continue;
        }
        compat = compat.max(geometry::norm(&ke.eval(x, y)?));
    }
    checks.push(Check::at_most("compatibility_max_abs_kernel", compat, 1e-12));

    attach_kd(&mut ke, cfg);
    let fresh = ke.random_pairs(vk.bound_pairs, derive_seed(seed, 2));
    checks.push(Check::at_most("pointwise_bound_scaled_sup", ke.scaled_kernel_sup(&fresh), ke.kd_empirical()));

    let g = ScalarField::bump(&planar(&[0.2, -0.1], dim, r), 0.6 * r, 1.0)?;
    let image = apply_kernel(&ke, &g).l2_norm_sq(4, 10, 64)?.sqrt();
    let op = operator_constant(&ke) * g.l2_norm()?;
    checks.push(Check::at_most("operator_bound_l2", image, op * (1.0 + OPERATOR_BOUND_SLACK)));

    let h = ScalarField::bump(&geometry::zeros(dim), r, 1.0)?;
    let probes = probe_points(dim, r, vk.probes, derive_seed(seed, 3));
    let div = verify_divergence_identity(&ke, &h, &probes)?;
    checks.push(Check::at_most("divergence_identity_max_error", div, vk.tolerance));

    Ok(ExperimentResult {
        checks,
        ..Default::default()
    })
}
