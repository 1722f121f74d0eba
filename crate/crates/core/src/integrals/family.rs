//! The scaled radial family `f_k(x) = g(|x| / k^{1/d}) / (C sqrt(k))` on `B(R k^{1/d})`.

use crate::error::{Error, Result};
use crate::geometry;
use crate::integrals::field::ScalarField;
use crate::integrals::profile::RadialProfile;
use crate::sampling::sphere_area;

/// Tolerance on `|int g^3 r^{d-1} dr|` below which a profile counts as balanced.
pub const BALANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RadialFieldFamily {
    profile: RadialProfile,
    dim: usize,
    c_norm: f64,
}

/// Builds the family with `C^2 = s_d int_0^R g^2 r^{d-1} dr`, so that every member has unit L2 norm.
pub fn build_radial_family(profile: RadialProfile, dim: usize) -> Result<RadialFieldFamily> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "the radial family needs d >= 2",
        });
    }
    let m2 = profile.moment(2, dim);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateProfile);
    }
    Ok(RadialFieldFamily {
        c_norm: (sphere_area(dim) * m2).sqrt(),
        profile,
        dim,
    })
}

impl RadialFieldFamily {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalization constant C.
    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    /// Radius of the ball carrying member k.
    pub fn carrier_radius(&self, k: u64) -> f64 {
        self.profile.radius() * (k as f64).powf(1.0 / self.dim as f64)
    }

    pub fn member(&self, k: u64) -> Result<ScalarField> {
        if k == 0 {
            return Err(Error::InvalidArgument("family index starts at 1".into()));
        }
        let kf = k as f64;
        ScalarField::radial(
            self.profile.clone(),
            &geometry::zeros(self.dim),
            kf.powf(1.0 / self.dim as f64),
            1.0 / (self.c_norm * kf.sqrt()),
        )
    }

    /// `int_0^R g^3 r^{d-1} dr`.
    pub fn cubic_moment(&self) -> f64 {
        self.profile.moment(3, self.dim)
    }

    pub fn is_balanced(&self) -> bool {
        self.cubic_moment().abs() <= BALANCE_TOL
    }

    /// Exact `sup |∇f_k| = sup|g'| / (C sqrt(k) k^{1/d})`.
    pub fn exact_grad_bound(&self, k: u64) -> f64 {
        let kf = k as f64;
        self.profile.sup_gprime() / (self.c_norm * kf.sqrt() * kf.powf(1.0 / self.dim as f64))
    }

    /// The looser squared bound `sup|g'|^2 d / (C^2 k^{1 + 2/d})`.
    pub fn grad_bound_sq(&self, k: u64) -> f64 {
        let kf = k as f64;
        let d = self.dim as f64;
        self.profile.sup_gprime().powi(2) * d / (self.c_norm.powi(2) * kf.powf(1.0 + 2.0 / d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn members_have_unit_norm() {
        for d in 2..=3 {
            let fam = build_radial_family(RadialProfile::g_plus(), d).unwrap();
            for k in [1, 4, 16] {
                let f = fam.member(k).unwrap();
                assert!((f.power_integral(2).unwrap() - 1.0).abs() < 1e-12);
                assert!((f.support_radius() - fam.carrier_radius(k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn g_plus_constants_in_the_plane() {
        let fam = build_radial_family(RadialProfile::g_plus(), 2).unwrap();
        assert!((fam.c_norm().powi(2) - 2.0 * PI / 60.0).abs() < 1e-14);
        let k3 = fam.member(1).unwrap().power_integral(3).unwrap();
        let expected = 2.0 * PI / 280.0 / (2.0 * PI / 60.0f64).powf(1.5);
        assert!((k3 - expected).abs() < 1e-13);
    }

    #[test]
    fn cumulants_scale_with_index() {
        let fam = build_radial_family(RadialProfile::g_plus(), 2).unwrap();
        let f1 = fam.member(1).unwrap();
        for j in [2u64, 9, 30] {
            let fj = fam.member(j).unwrap();
            for k in 2..=4u32 {
                let expected = f1.power_integral(k).unwrap() * (j as f64).powf(1.0 - k as f64 / 2.0);
                assert!((fj.power_integral(k).unwrap() - expected).abs() < 1e-12 * expected.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn gradient_bounds() {
        let fam = build_radial_family(RadialProfile::g_balanced(2), 2).unwrap();
        for k in [1, 4, 16] {
            let f = fam.member(k).unwrap();
            assert!((f.sup_grad_norm() - fam.exact_grad_bound(k)).abs() < 1e-12);
            assert!(f.sup_grad_norm().powi(2) <= fam.grad_bound_sq(k));
        }
        assert!(fam.is_balanced());
        assert!(!build_radial_family(RadialProfile::g_plus(), 2).unwrap().is_balanced());
    }

    #[test]
    fn degenerate_profile_is_rejected() {
        let zero = RadialProfile::polynomial("zero", &[0.0], 1.0).unwrap();
        assert_eq!(build_radial_family(zero, 2).unwrap_err(), Error::DegenerateProfile);
    }
}
