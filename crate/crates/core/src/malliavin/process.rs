//! Simple processes `u_x = sum_i g_i(x) G_i`, their Skorohod integral and the
//! duality with the gradient.

use crate::error::Result;
use crate::geometry;
use crate::integrals::{atom_sum, check_support, ScalarField};
use crate::kernel::KernelEvaluator;
use crate::malliavin::functional::{gradient_d, CylindricalFunctional};
use crate::malliavin::powers::TransportPlan;
use crate::montecarlo::{replicate, McSettings, SampleStats};
use crate::sampling::{sample_with, Configuration};

/// `(∇̃h_j) g` for every field `h_j` of `functional`.
fn transports(ke: &KernelEvaluator, g: &ScalarField, functional: &CylindricalFunctional) -> Result<Vec<ScalarField>> {
    functional
        .fields()
        .iter()
        .map(|h| TransportPlan::new(ke, h)?.apply(g))
        .collect()
}

/// `<g, D F> = sum_j ∂_j φ sum_i [(∇̃h_j) g](X_i)` given the transports of `g`.
fn pairing(partials: &[f64], transports: &[ScalarField], cfg: &Configuration) -> f64 {
    partials
        .iter()
        .zip(transports)
        .filter(|(p, _)| **p != 0.0)
        .map(|(p, t)| p * atom_sum(t, cfg))
        .sum()
}

#[derive(Debug, Clone)]
struct Term {
    g: ScalarField,
    functional: CylindricalFunctional,
    /// `(∇̃h_j) g` for the fields of `functional`.
    corrections: Vec<ScalarField>,
}

#[derive(Debug, Clone)]
pub struct SimpleProcess {
    ke: KernelEvaluator,
    terms: Vec<Term>,
    /// `int g_i g_k dλ`.
    gram: Vec<Vec<f64>>,
}

impl SimpleProcess {
    pub fn new(ke: &KernelEvaluator, terms: Vec<(ScalarField, CylindricalFunctional)>) -> Result<Self> {
        let terms: Vec<Term> = terms
            .into_iter()
            .map(|(g, functional)| {
                let corrections = transports(ke, &g, &functional)?;
                Ok(Term {
                    g,
                    functional,
                    corrections,
                })
            })
            .collect::<Result<_>>()?;
        let gram = terms
            .iter()
            .map(|a| terms.iter().map(|b| a.g.inner(&b.g)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        Ok(Self {
            ke: ke.clone(),
            terms,
            gram,
        })
    }

    /// `u = g` with `G = 1`.
    pub fn deterministic(ke: &KernelEvaluator, g: ScalarField) -> Result<Self> {
        Self::new(ke, vec![(g, CylindricalFunctional::constant(1.0))])
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn integrands(&self) -> impl Iterator<Item = &ScalarField> {
        self.terms.iter().map(|t| &t.g)
    }

    /// Every field inside `G_i` lies at first coordinates not exceeding the
    /// smallest first coordinate of `supp g_i`.
    pub fn is_predictable(&self) -> bool {
        self.terms.iter().all(|t| {
            let b = t.g.support_ball();
            t.functional.max_first_coordinate() <= b.center[0] - b.radius
        })
    }

    pub fn check_carrier(&self, cfg: &Configuration) -> Result<()> {
        for t in &self.terms {
            check_support(&t.g, cfg.radius())?;
            t.functional.check_carrier(cfg)?;
        }
        Ok(())
    }

    /// `u_x(γ)`.
    pub fn value_at(&self, cfg: &Configuration, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.g.value(x) * t.functional.eval(cfg)).sum()
    }

    /// `<g_i, D G_i>` for each term.
    pub fn correction_terms(&self, cfg: &Configuration) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| pairing(&t.functional.partials(cfg), &t.corrections, cfg))
            .collect()
    }

    /// `int u_x^2 dλ(x)`.
    pub fn l2_norm_sq(&self, cfg: &Configuration) -> f64 {
        let coeffs: Vec<f64> = self.terms.iter().map(|t| t.functional.eval(cfg)).collect();
        let mut s = 0.0;
        for (i, a) in coeffs.iter().enumerate() {
            for (k, b) in coeffs.iter().enumerate() {
                s += a * b * self.gram[i][k];
            }
        }
        s
    }

    /// `D_y u_x = sum_i g_i(x) D_y G_i`.
    pub fn gradient_d_at(&self, cfg: &Configuration, x: &[f64], y: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for t in &self.terms {
            let gx = t.g.value(x);
            if gx != 0.0 {
                s += gx * gradient_d(&self.ke, &t.functional, cfg, y)?;
            }
        }
        Ok(s)
    }

    /// `∇̃_y u_x = D_y u_x + <G(x, y), ∇_x u_x>`.
    pub fn covariant_nabla(&self, cfg: &Configuration, x: &[f64], y: &[f64]) -> Result<f64> {
        let kernel = self.ke.eval(x, y)?;
        let mut transport = 0.0;
        for t in &self.terms {
            let grad = t.g.gradient(x);
            if grad.iter().any(|&v| v != 0.0) {
                transport += t.functional.eval(cfg) * geometry::dot(&kernel, &grad);
            }
        }
        Ok(self.gradient_d_at(cfg, x, y)? + transport)
    }
}

/// `δ(u) = sum_i (G_i δ(g_i) - <g_i, D G_i>)`.
pub fn skorohod(u: &SimpleProcess, cfg: &Configuration) -> Result<f64> {
    u.check_carrier(cfg)?;
    Ok(skorohod_unchecked(u, cfg))
}

fn skorohod_unchecked(u: &SimpleProcess, cfg: &Configuration) -> f64 {
    u.terms
        .iter()
        .map(|t| {
            let delta = atom_sum(&t.g, cfg) - t.g.integral();
            t.functional.eval(cfg) * delta - pairing(&t.functional.partials(cfg), &t.corrections, cfg)
        })
        .sum()
}

/// A process `u` and a functional `F` with the transports `(∇̃h^F_j) g_i`
/// needed for `<u, DF>` precomputed.
#[derive(Debug, Clone)]
pub struct DualityPair {
    pub name: String,
    u: SimpleProcess,
    f: CylindricalFunctional,
    /// `[i][j] = (∇̃h^F_j) g_i`.
    pair_transports: Vec<Vec<ScalarField>>,
}

impl DualityPair {
    pub fn new(name: &str, u: SimpleProcess, f: CylindricalFunctional) -> Result<Self> {
        let pair_transports = u
            .terms
            .iter()
            .map(|t| transports(&u.ke, &t.g, &f))
            .collect::<Result<_>>()?;
        Ok(Self {
            name: name.to_string(),
            u,
            f,
            pair_transports,
        })
    }

    pub fn process(&self) -> &SimpleProcess {
        &self.u
    }

    pub fn functional(&self) -> &CylindricalFunctional {
        &self.f
    }

    /// `<u, DF>_{L^2}` on one configuration.
    pub fn gradient_pairing(&self, cfg: &Configuration) -> f64 {
        let partials = self.f.partials(cfg);
        self.u
            .terms
            .iter()
            .zip(&self.pair_transports)
            .map(|(t, tr)| t.functional.eval(cfg) * pairing(&partials, tr, cfg))
            .sum()
    }

    /// `(<u, DF>, F δ(u))` on one configuration.
    pub fn sample(&self, cfg: &Configuration) -> (f64, f64) {
        (self.gradient_pairing(cfg), self.f.eval(cfg) * skorohod_unchecked(&self.u, cfg))
    }
}

/// Monte Carlo comparison of `E<u, DF>` and `E[F δ(u)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    pub lhs: SampleStats,
    pub rhs: SampleStats,
    /// Statistics of the per-configuration difference.
    pub difference: SampleStats,
    /// `sqrt(se_lhs^2 + se_rhs^2)`.
    pub combined_se: f64,
}

impl DualityReport {
    /// `|E<u, DF> - E[F δ(u)]|`.
    pub fn gap(&self) -> f64 {
        (self.lhs.mean - self.rhs.mean).abs()
    }

    pub fn passes(&self, n_se: f64) -> bool {
        self.gap() <= n_se * self.combined_se
    }
}

pub fn duality_check(pair: &DualityPair, mc: &McSettings) -> Result<DualityReport> {
    let ke = &pair.u.ke;
    let (dim, radius) = (ke.dim(), ke.radius());
    let probe = Configuration::empty(dim, radius);
    pair.u.check_carrier(&probe)?;
    pair.f.check_carrier(&probe)?;
    let samples = replicate(mc, |_, rng| Ok(pair.sample(&sample_with(rng, dim, radius))))?;
    let lhs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let diff: Vec<f64> = samples.iter().map(|s| s.0 - s.1).collect();
    let (l, r) = (SampleStats::from_slice(&lhs), SampleStats::from_slice(&rhs));
    Ok(DualityReport {
        lhs: l,
        rhs: r,
        difference: SampleStats::from_slice(&diff),
        combined_se: l.std_error.hypot(r.std_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::compensated_integral;
    use crate::kernel::QuadraturePolicy;
    use crate::malliavin::fixtures;
    use crate::sampling::{sample_configuration, SamplerSpec};

    fn ke2() -> KernelEvaluator {
        KernelEvaluator::new(2, 1.0, QuadraturePolicy::default()).unwrap()
    }

    #[test]
    fn deterministic_process_reduces_to_compensated_integral() {
        let ke = ke2();
        let g = ScalarField::bump(&[0.1, 0.0], 0.6, 1.0).unwrap();
        let u = SimpleProcess::deterministic(&ke, g.clone()).unwrap();
        let cfg = sample_configuration(&SamplerSpec::new(2, 1.0, 3).unwrap());
        assert!((skorohod(&u, &cfg).unwrap() - compensated_integral(&g, &cfg).unwrap()).abs() < 1e-14);
        assert!(u.is_predictable());
    }

    #[test]
    fn predictable_process_has_no_correction() {
        let ke = ke2();
        let u = fixtures::predictable_process(&ke).unwrap();
        assert!(u.is_predictable());
        for seed in 0..20 {
            let cfg = sample_configuration(&SamplerSpec::new(2, 1.0, seed).unwrap());
            assert!(u.correction_terms(&cfg).iter().all(|c| c.abs() < 1e-12));
        }
        // Zeros of D and ∇̃ for x before y in the first-coordinate order.
        let cfg = sample_configuration(&SamplerSpec::new(2, 1.0, 8).unwrap());
        for (x, y) in [([0.2, 0.0], [0.5, 0.1]), ([0.4, 0.2], [0.45, -0.3]), ([0.1, -0.1], [0.6, 0.0])] {
            assert_eq!(u.gradient_d_at(&cfg, &x, &y).unwrap(), 0.0);
            assert_eq!(u.covariant_nabla(&cfg, &x, &y).unwrap(), 0.0);
        }
    }

    #[test]
    fn anticipating_fixture_is_not_predictable() {
        let ke = ke2();
        let pairs = fixtures::duality_pairs(&ke).unwrap();
        assert!(!pairs[1].process().is_predictable());
        let cfg = sample_configuration(&SamplerSpec::new(2, 1.0, 4).unwrap());
        let mut nonzero = false;
        for seed in 0..20 {
            let cfg = sample_configuration(&SamplerSpec::new(2, 1.0, seed).unwrap());
            nonzero |= pairs[1].process().correction_terms(&cfg)[0].abs() > 1e-6;
        }
        assert!(nonzero);
        let (a, b) = pairs[0].sample(&cfg);
        assert!(a.is_finite() && b.is_finite());
    }

    #[test]
    fn duality_holds_for_fixtures() {
        let ke = ke2();
        for pair in fixtures::duality_pairs(&ke).unwrap() {
            let rep = duality_check(&pair, &McSettings::new(20_000, 77)).unwrap();
            assert!(rep.passes(4.0), "{}: {rep:?}", pair.name);
        }
    }

    #[test]
    fn predictable_isometry() {
        let ke = ke2();
        let u = fixtures::predictable_process(&ke).unwrap();
        let vals = replicate(&McSettings::new(40_000, 5), |_, rng| {
            let cfg = sample_with(rng, 2, 1.0);
            Ok(skorohod(&u, &cfg)?.powi(2) - u.l2_norm_sq(&cfg))
        })
        .unwrap();
        let st = SampleStats::from_slice(&vals);
        assert!(st.mean.abs() < 4.0 * st.std_error, "{st:?}");
    }
}
