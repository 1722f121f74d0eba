//! Stein-type upper bounds on `W1(δ(f), N(0, 1))`.

use crate::error::Result;
use crate::integrals::{check_support, cumulant, RadialFieldFamily, ScalarField};
use crate::kernel::{operator_constant, KernelEvaluator};
use crate::sampling::ball_volume;

/// Additive pieces of a bound. All entries are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundComponents {
    /// `|1 - ||f||_2^2|`.
    pub variance_gap: f64,
    /// `int |f|^3` (classical) or `|κ_3|` (third-cumulant bound).
    pub cumulant_term: f64,
    /// `2 (K_d v_d R')^2 ||f||_2 ||∇f||_∞^2`; zero for the classical bound.
    pub remainder: f64,
}

impl BoundComponents {
    pub fn total(&self) -> f64 {
        self.variance_gap + self.cumulant_term + self.remainder
    }
}

/// `|1 - ||f||_2^2| + int |f|^3 dλ`.
pub fn classical_components(f: &ScalarField) -> Result<BoundComponents> {
    Ok(BoundComponents {
        variance_gap: (1.0 - f.power_integral(2)?).abs(),
        cumulant_term: f.abs_power_integral(3)?,
        remainder: 0.0,
    })
}

pub fn classical_bound(f: &ScalarField) -> Result<f64> {
    Ok(classical_components(f)?.total())
}

/// Third-cumulant bound with an explicit value for `||∇f||_∞^2`.
pub fn third_cumulant_components_with(f: &ScalarField, ke: &KernelEvaluator, grad_sq: f64) -> Result<BoundComponents> {
    check_support(f, ke.radius())?;
    let c = operator_constant(ke);
    Ok(BoundComponents {
        variance_gap: (1.0 - f.power_integral(2)?).abs(),
        cumulant_term: cumulant(f, 3)?.abs(),
        remainder: 2.0 * c * c * f.l2_norm()? * grad_sq,
    })
}

/// `|1 - ||f||^2| + |κ_3| + 2 (K_d v_d R')^2 ||f||_2 ||∇f||_∞^2` with R' of
/// `ke`, which must carry the support of `f`.
pub fn third_cumulant_components(f: &ScalarField, ke: &KernelEvaluator) -> Result<BoundComponents> {
    third_cumulant_components_with(f, ke, f.sup_grad_norm().powi(2))
}

pub fn third_cumulant_bound(f: &ScalarField, ke: &KernelEvaluator) -> Result<f64> {
    Ok(third_cumulant_components(f, ke)?.total())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct O1kBound {
    pub value: f64,
    /// Whether the profile satisfies `int g^3 r^{d-1} dr = 0`; the value is
    /// only a bound when it does.
    pub balanced: bool,
}

/// `2 (2 K_d v_d R)^2 d ||g'||_∞^2 / (k C^2)` with R the profile radius.
pub fn o1k_bound(family: &RadialFieldFamily, k: u64, ke: &KernelEvaluator) -> O1kBound {
    let d = family.dim();
    let r = family.profile().radius();
    let kv = ke.kd_empirical() * ball_volume(d, 1.0) * 2.0 * r;
    let value = 2.0 * kv * kv * d as f64 * family.profile().sup_gprime().powi(2) / (k as f64 * family.c_norm().powi(2));
    let balanced = family.is_balanced();
    if !balanced {
        log::warn!(
            "profile '{}' is not cubic-balanced (int g^3 r^(d-1) dr = {:e}); the O(1/k) expression is not a bound",
            family.profile().name(),
            family.cubic_moment()
        );
    }
    O1kBound { value, balanced }
}

/// All bounds for one field.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub classical: f64,
    pub third_cumulant: f64,
    /// Present only for members of a cubic-balanced family.
    pub o1k: Option<f64>,
    pub classical_components: BoundComponents,
    pub components: BoundComponents,
    pub kd_used: f64,
    pub kd_is_empirical: bool,
}

impl BoundReport {
    /// `ke` must carry the support of `f`.
    pub fn for_field(f: &ScalarField, ke: &KernelEvaluator) -> Result<Self> {
        let classical_components = classical_components(f)?;
        let components = third_cumulant_components(f, ke)?;
        Ok(Self {
            classical: classical_components.total(),
            third_cumulant: components.total(),
            o1k: None,
            classical_components,
            components,
            kd_used: ke.kd_empirical(),
            kd_is_empirical: true,
        })
    }

    /// Bounds for member `k`; `ke` is the evaluator for the profile's own radius.
    pub fn for_member(family: &RadialFieldFamily, k: u64, ke: &KernelEvaluator) -> Result<Self> {
        let f = family.member(k)?;
        let ke_k = ke.rescaled(family.carrier_radius(k))?;
        let mut report = Self::for_field(&f, &ke_k)?;
        if family.is_balanced() {
            report.o1k = Some(o1k_bound(family, k, ke).value);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{build_radial_family, RadialProfile};
    use crate::kernel::QuadraturePolicy;
    use std::f64::consts::PI;

    fn ke() -> KernelEvaluator {
        let mut ke = KernelEvaluator::new(2, 1.0, QuadraturePolicy::default()).unwrap();
        ke.set_kd(3.0);
        ke
    }

    #[test]
    fn classical_bound_cases() {
        assert_eq!(classical_bound(&ScalarField::zero(2)).unwrap(), 1.0);
        let fam = build_radial_family(RadialProfile::g_plus(), 2).unwrap();
        for k in [1u64, 4, 9] {
            let f = fam.member(k).unwrap();
            let expected = 2.0 * PI * (1.0 / 280.0) / (fam.c_norm().powi(3) * (k as f64).sqrt());
            assert!((classical_bound(&f).unwrap() - expected).abs() < 1e-9 * expected);
        }
    }

    #[test]
    fn third_cumulant_bound_forms_agree() {
        let ke = ke();
        let fam = build_radial_family(RadialProfile::g_plus(), 2).unwrap();
        let f = fam.member(1).unwrap();
        let c = third_cumulant_components(&f, &ke).unwrap();
        let kv = ke.kd_empirical() * PI * 1.0;
        let alt = 8.0 * kv * kv * f.sup_grad_norm().powi(2);
        assert!((c.remainder - alt).abs() < 1e-12 * alt);
        assert!(c.variance_gap < 1e-12);
        assert!((c.cumulant_term - cumulant(&f, 3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn o1k_scaling_and_cross_check() {
        let base = ke();
        let fam = build_radial_family(RadialProfile::g_balanced(2), 2).unwrap();
        let b1 = o1k_bound(&fam, 1, &base);
        assert!(b1.balanced);
        for k in [2u64, 16, 256] {
            assert!((o1k_bound(&fam, k, &base).value * k as f64 - b1.value).abs() < 1e-12 * b1.value);
        }
        // With κ_3 = 0 and the looser gradient bound the third-cumulant bound
        // reduces to the closed form.
        for k in [1u64, 4] {
            let f = fam.member(k).unwrap();
            let ke_k = base.rescaled(fam.carrier_radius(k)).unwrap();
            let c = third_cumulant_components_with(&f, &ke_k, fam.grad_bound_sq(k)).unwrap();
            let closed = o1k_bound(&fam, k, &base).value;
            assert!((c.remainder - closed).abs() < 1e-9 * closed);
            assert!(c.cumulant_term < 1e-10);
        }
        let plus = build_radial_family(RadialProfile::g_plus(), 2).unwrap();
        assert!(!o1k_bound(&plus, 1, &base).balanced);
        assert!(BoundReport::for_member(&plus, 4, &base).unwrap().o1k.is_none());
        assert!(BoundReport::for_member(&fam, 4, &base).unwrap().o1k.is_some());
    }

    #[test]
    fn support_must_fit_in_kernel_radius() {
        let fam = build_radial_family(RadialProfile::g_plus(), 2).unwrap();
        assert!(third_cumulant_bound(&fam.member(4).unwrap(), &ke()).is_err());
    }
}
