//! Deterministic fields, compensated Poisson integrals and cumulants.

pub mod family;
pub mod field;
pub mod profile;

pub use family::{build_radial_family, RadialFieldFamily};
pub use field::ScalarField;
pub use profile::RadialProfile;

use crate::error::{Error, Result};
use crate::montecarlo::{replicate, McSettings};
use crate::sampling::{sample_with, Configuration};

/// Slack allowed when comparing a support radius with the carrier radius.
const SUPPORT_SLACK: f64 = 1e-12;

pub(crate) fn check_support(f: &ScalarField, carrier: f64) -> Result<()> {
    let support = f.support_radius();
    if !f.is_zero() && support > carrier * (1.0 + SUPPORT_SLACK) {
        return Err(Error::SupportExceedsCarrier { support, carrier });
    }
    Ok(())
}

/// `sum_i f(X_i)`.
pub fn atom_sum(f: &ScalarField, cfg: &Configuration) -> f64 {
    cfg.points().map(|p| f.value(p)).sum()
}

/// `sum_i f(X_i) - int f dλ`, using the compensator cached on `f`.
pub fn compensated_integral(f: &ScalarField, cfg: &Configuration) -> Result<f64> {
    check_support(f, cfg.radius())?;
    Ok(atom_sum(f, cfg) - f.integral())
}

/// `κ_k = int f^k dλ`.
pub fn cumulant(f: &ScalarField, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidOrder(k));
    }
    f.power_integral(k as u32)
}

/// Monte Carlo sample of `δ(f)`, with configurations drawn on the smallest
/// origin-centred ball containing the support of `f`.
pub fn sample_integrals(f: &ScalarField, mc: &McSettings) -> Result<Vec<f64>> {
    let carrier = f.support_radius().max(f64::MIN_POSITIVE);
    let dim = f.dim();
    replicate(mc, |_, rng| {
        let cfg = sample_with(rng, dim, carrier);
        Ok(atom_sum(f, &cfg) - f.integral())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{variance_std_error, SampleStats};

    #[test]
    fn zero_field_and_empty_configuration() {
        let cfg = Configuration::empty(2, 1.0);
        assert_eq!(compensated_integral(&ScalarField::zero(2), &cfg).unwrap(), 0.0);
        let f = ScalarField::bump(&[0.0, 0.0], 0.5, 1.0).unwrap();
        assert_eq!(compensated_integral(&f, &cfg).unwrap(), -f.integral());
    }

    #[test]
    fn support_must_fit_in_carrier() {
        let f = ScalarField::bump(&[0.5, 0.0], 0.6, 1.0).unwrap();
        let cfg = Configuration::empty(2, 1.0);
        assert!(matches!(
            compensated_integral(&f, &cfg),
            Err(Error::SupportExceedsCarrier { .. })
        ));
        assert_eq!(cumulant(&f, 1), Err(Error::InvalidOrder(1)));
    }

    #[test]
    fn mean_variance_and_third_moment() {
        let fam = build_radial_family(RadialProfile::g_plus(), 2).unwrap();
        let f = fam.member(1).unwrap();
        let xs = sample_integrals(&f, &McSettings::new(100_000, 3)).unwrap();
        let st = SampleStats::from_slice(&xs);
        assert!(st.mean.abs() < 4.0 * st.std_error);
        assert!((st.variance - 1.0).abs() < 4.0 * variance_std_error(&xs));
        let third: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let t = SampleStats::from_slice(&third);
        let k3 = cumulant(&f, 3).unwrap();
        assert!((t.mean - k3).abs() < 4.0 * t.std_error);
    }
}
