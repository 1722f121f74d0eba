//! Edgeworth-type expansion of `E[δ(f) g(δ(f))]` for deterministic `f`.

use crate::error::{Error, Result};
use crate::integrals::{check_support, cumulant, sample_integrals, ScalarField};
use crate::kernel::{operator_constant, KernelEvaluator};
use crate::montecarlo::{McSettings, SampleStats};

/// Smooth test functions with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    Sine,
    Identity,
}

impl TestFunction {
    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Sine => "sin",
            TestFunction::Identity => "identity",
        }
    }

    /// `g^{(order)}(z)`.
    pub fn derivative(&self, order: usize, z: f64) -> f64 {
        match self {
            TestFunction::Sine => match order % 4 {
                0 => z.sin(),
                1 => z.cos(),
                2 => -z.sin(),
                _ => -z.cos(),
            },
            TestFunction::Identity => match order {
                0 => z,
                1 => 1.0,
                _ => 0.0,
            },
        }
    }

    /// `sup |g^{(order)}|`.
    pub fn sup_derivative(&self, order: usize) -> f64 {
        match (self, order) {
            (TestFunction::Sine, _) => 1.0,
            (TestFunction::Identity, 0) => f64::INFINITY,
            (TestFunction::Identity, 1) => 1.0,
            (TestFunction::Identity, _) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeworthReport {
    pub order: usize,
    /// `E[δ g(δ)]`.
    pub lhs: f64,
    /// `κ_{k+1}/k! E[g^{(k)}(δ)]` for `k = 1..=n+1`.
    pub terms: Vec<f64>,
    /// `lhs - sum(terms)`, estimated per replication on common random numbers.
    pub residual: f64,
    pub residual_se: f64,
    /// `(K_d v_d R')^{n+1} ||f||_2 ||∇f||_∞^{n+1} sup |g^{(n+1)}|`.
    pub remainder_bound: f64,
    pub kd_used: f64,
    pub n_samples: usize,
}

impl EdgeworthReport {
    pub fn passes(&self, n_se: f64) -> bool {
        self.residual.abs() <= self.remainder_bound + n_se * self.residual_se
    }
}

/// Monte Carlo check of the expansion of order `n` with the kernel `ke`
/// carrying `f` (its R' enters the remainder bound).
pub fn edgeworth_residual(
    ke: &KernelEvaluator,
    f: &ScalarField,
    test_g: TestFunction,
    n: usize,
    mc: &McSettings,
) -> Result<EdgeworthReport> {
    if n > 6 {
        return Err(Error::InvalidOrder(n));
    }
    check_support(f, ke.radius())?;
    let kappas: Vec<f64> = (2..=n + 2).map(|k| cumulant(f, k)).collect::<Result<_>>()?;
    let samples = sample_integrals(f, mc)?;
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mut lhs_vals = Vec::with_capacity(samples.len());
    let mut term_vals = vec![Vec::with_capacity(samples.len()); n + 1];
    let mut resid = Vec::with_capacity(samples.len());
    for &z in &samples {
        let l = z * test_g.derivative(0, z);
        let mut r = l;
        for k in 1..=n + 1 {
            let t = kappas[k - 1] / fact(k) * test_g.derivative(k, z);
            term_vals[k - 1].push(t);
            r -= t;
        }
        lhs_vals.push(l);
        resid.push(r);
    }
    let rs = SampleStats::from_slice(&resid);
    let c = operator_constant(ke);
    let bound = c.powi(n as i32 + 1)
        * f.l2_norm()?
        * f.sup_grad_norm().powi(n as i32 + 1)
        * test_g.sup_derivative(n + 1);
    Ok(EdgeworthReport {
        order: n,
        lhs: SampleStats::from_slice(&lhs_vals).mean,
        terms: term_vals.iter().map(|v| SampleStats::from_slice(v).mean).collect(),
        residual: rs.mean,
        residual_se: rs.std_error,
        remainder_bound: if bound.is_nan() { 0.0 } else { bound },
        kd_used: ke.kd_empirical(),
        n_samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{build_radial_family, RadialProfile};
    use crate::kernel::QuadraturePolicy;

    #[test]
    fn zero_field_gives_zero_everything() {
        let ke = KernelEvaluator::new(2, 1.0, QuadraturePolicy::default()).unwrap();
        let rep = edgeworth_residual(&ke, &ScalarField::zero(2), TestFunction::Sine, 1, &McSettings::new(1000, 1)).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.terms.iter().all(|t| *t == 0.0));
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn identity_test_function_has_zero_residual() {
        let mut ke = KernelEvaluator::new(2, 1.0, QuadraturePolicy::default()).unwrap();
        ke.estimate_kd(2000, 1);
        let f = build_radial_family(RadialProfile::g_plus(), 2).unwrap().member(1).unwrap();
        let rep = edgeworth_residual(&ke, &f, TestFunction::Identity, 1, &McSettings::new(20_000, 2)).unwrap();
        // lhs is E[δ^2] and the only nonzero term is κ_2 = 1.
        assert!((rep.terms[0] - 1.0).abs() < 1e-12);
        assert!(rep.passes(4.0), "{rep:?}");
        assert_eq!(rep.remainder_bound, 0.0);
    }

    #[test]
    fn sine_residual_within_bound() {
        let mut ke = KernelEvaluator::new(2, 1.0, QuadraturePolicy::default()).unwrap();
        ke.estimate_kd(2000, 1);
        let fam = build_radial_family(RadialProfile::g_balanced(2), 2).unwrap();
        let ke4 = ke.rescaled(fam.carrier_radius(4)).unwrap();
        let rep = edgeworth_residual(&ke4, &fam.member(4).unwrap(), TestFunction::Sine, 1, &McSettings::new(50_000, 3)).unwrap();
        assert!(rep.passes(4.0), "{rep:?}");
        let mut broken = ke4.clone();
        broken.set_kd(0.0);
        let rep0 = edgeworth_residual(&broken, &fam.member(4).unwrap(), TestFunction::Sine, 1, &McSettings::new(50_000, 3)).unwrap();
        assert_eq!(rep0.remainder_bound, 0.0);
    }
}
