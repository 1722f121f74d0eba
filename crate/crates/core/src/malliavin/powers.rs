//! Transport operator `(∇̃h) f (x) = <V_f(x), ∇h(x)>`, its powers, and the
//! deterministic identities built on them.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, Ball, Vector};
use crate::integrals::{cumulant, ScalarField};
use crate::kernel::{KernelEvaluator, RayBundle};
use crate::malliavin::functional::{gradient_d, CylindricalFunctional};
use crate::quadrature::BallRule;
use crate::sampling::Configuration;

/// Grid on which iterates supported in `ball` are stored.
pub fn iterate_rule(ke: &KernelEvaluator, ball: &Ball) -> Result<BallRule> {
    let p = ke.policy();
    let angular = if ball.dim() == 2 { p.grid_angular } else { p.grid_angular / 2 };
    BallRule::new(ball.clone(), p.grid_panels, p.grid_nodes, angular)
}

/// Precomputed kernel data for repeated application of `∇̃h`: the iterate
/// grid on the support of `h`, with `∇h` and the ray bundle at every node.
pub struct TransportPlan {
    ke: KernelEvaluator,
    rule: Arc<BallRule>,
    grad_h: Vec<Vector>,
    bundles: Vec<Option<RayBundle>>,
}

impl TransportPlan {
    pub fn new(ke: &KernelEvaluator, h: &ScalarField) -> Result<Self> {
        let rule = Arc::new(iterate_rule(ke, h.support_ball())?);
        let grad_h: Vec<Vector> = (0..rule.len()).map(|i| h.gradient(rule.point(i))).collect();
        let bundles: Result<Vec<Option<RayBundle>>> = (0..rule.len())
            .into_par_iter()
            .map(|i| {
                if grad_h[i].iter().all(|&v| v == 0.0) {
                    Ok(None)
                } else {
                    RayBundle::at(ke, rule.point(i)).map(Some)
                }
            })
            .collect();
        Ok(Self {
            ke: ke.clone(),
            rule,
            grad_h,
            bundles: bundles?,
        })
    }

    pub fn rule(&self) -> &Arc<BallRule> {
        &self.rule
    }

    /// `(∇̃h) f`, materialized on the grid over the support of `h`.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        let values: Vec<f64> = (0..self.rule.len())
            .into_par_iter()
            .map(|i| match &self.bundles[i] {
                None => 0.0,
                Some(b) => {
                    let v = b.apply(&self.ke, self.rule.point(i), f);
                    geometry::dot(&v, &self.grad_h[i])
                }
            })
            .collect();
        ScalarField::from_grid(self.rule.clone(), values)
    }

    /// `[f, (∇̃h) f, ..., (∇̃h)^n f]`.
    pub fn powers(&self, f: &ScalarField, n: usize) -> Result<Vec<ScalarField>> {
        let mut out = vec![f.clone()];
        for _ in 0..n {
            let next = self.apply(out.last().unwrap())?;
            out.push(next);
        }
        Ok(out)
    }
}

/// `(∇̃h) f`.
pub fn transport(ke: &KernelEvaluator, h: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    TransportPlan::new(ke, h)?.apply(f)
}

/// `(∇̃h)^n f`; `n = 0` returns `f`.
pub fn operator_power_apply(ke: &KernelEvaluator, h: &ScalarField, n: usize, f: &ScalarField) -> Result<ScalarField> {
    if n == 0 {
        return Ok(f.clone());
    }
    let plan = TransportPlan::new(ke, h)?;
    Ok(plan.powers(f, n)?.pop().unwrap())
}

/// Both sides of `Γ_k 1 = κ_k / (k-1)!` for a deterministic field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCheck {
    pub order: usize,
    /// `<(∇̃h)^{k-2} h, h>`.
    pub via_operators: f64,
    /// `κ_k / (k-1)!`.
    pub via_cumulant: f64,
    /// `|via_operators (k-1)! - κ_k| / max(|κ_k|, 1e-6)`.
    pub relative_error: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-6)
}

/// `Γ_k` of a deterministic `h` through operator powers, cross-checked with the cumulant.
pub fn gamma_deterministic(ke: &KernelEvaluator, h: &ScalarField, k: usize) -> Result<GammaCheck> {
    Ok(gamma_sequence(ke, h, &[k])?.remove(0))
}

/// [`gamma_deterministic`] for several orders, sharing the iterates.
pub fn gamma_sequence(ke: &KernelEvaluator, h: &ScalarField, orders: &[usize]) -> Result<Vec<GammaCheck>> {
    if let Some(&k) = orders.iter().find(|&&k| k < 2) {
        return Err(Error::InvalidOrder(k));
    }
    let top = orders.iter().copied().max().unwrap_or(2);
    let iterates = if top > 2 {
        TransportPlan::new(ke, h)?.powers(h, top - 2)?
    } else {
        vec![h.clone()]
    };
    orders
        .iter()
        .map(|&k| {
            let it = &iterates[k - 2];
            let via_operators = if k == 2 { h.power_integral(2)? } else { it.inner(h)? };
            let kappa = cumulant(h, k)?;
            let fact = factorial(k - 1);
            Ok(GammaCheck {
                order: k,
                via_operators,
                via_cumulant: kappa / fact,
                relative_error: relative(via_operators * fact, kappa),
            })
        })
        .collect()
}

/// Both sides of `<(∇̃h)^n f, h^m> = m!/(m+n)! int h^{m+n} f dλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub n: usize,
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
}

/// Moment identity on the grid `ns x ms`, sharing operator iterates across `m`.
pub fn moment_identity_grid(
    ke: &KernelEvaluator,
    h: &ScalarField,
    f: &ScalarField,
    ns: &[usize],
    ms: &[usize],
) -> Result<Vec<MomentCheck>> {
    let top = ns.iter().copied().max().unwrap_or(0);
    let iterates = TransportPlan::new(ke, h)?.powers(f, top)?;
    let mut out = Vec::new();
    for &n in ns {
        for &m in ms {
            let lhs = iterates[n].weighted_integral(|x| h.value(x).powi(m as i32))?;
            let integral = h.weighted_integral(|x| h.value(x).powi((m + n) as i32 - 1) * f.value(x))?;
            let rhs = factorial(m) / factorial(m + n) * integral;
            out.push(MomentCheck {
                n,
                m,
                lhs,
                rhs,
                relative_error: (lhs - rhs).abs() / rhs.abs().max(1e-300),
            });
        }
    }
    Ok(out)
}

pub fn moment_identity(ke: &KernelEvaluator, h: &ScalarField, f: &ScalarField, n: usize, m: usize) -> Result<MomentCheck> {
    Ok(moment_identity_grid(ke, h, f, &[n], &[m])?.remove(0))
}

/// `∇̃_y h(x) = <G(x, y), ∇h(x)>` for deterministic `h`.
pub fn covariant_nabla_deterministic(ke: &KernelEvaluator, h: &ScalarField, x: &[f64], y: &[f64]) -> Result<f64> {
    let g = ke.eval(x, y)?;
    Ok(geometry::dot(&g, &h.gradient(x)))
}

/// Sides of the pathwise relation `D_y δ(h) = h(y) + δ(∇̃_y h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub error: f64,
}

/// Evaluates `D_y δ(h)` through the gradient of the linear functional `<h, γ>`
/// and `h(y) + sum_i ∇̃_y h(X_i) - int ∇̃_y h dλ` with the compensator computed
/// by quadrature. Atoms within the excision radius of `y` are skipped on both sides.
pub fn commutation_check(ke: &KernelEvaluator, h: &ScalarField, cfg: &Configuration, y: &[f64]) -> Result<CommutationCheck> {
    let lhs = gradient_d(ke, &CylindricalFunctional::linear(h.clone()), cfg, y)?;
    let eps = ke.epsilon();
    let mut atoms = 0.0;
    for x in cfg.points() {
        if geometry::distance(x, y) < eps || !h.support_ball().contains(x) {
            continue;
        }
        atoms += covariant_nabla_deterministic(ke, h, x, y)?;
    }
    let compensator = ke.kernel_gradient_integral(h, y)?;
    let rhs = h.value(y) + atoms - compensator;
    Ok(CommutationCheck {
        lhs,
        rhs,
        error: (lhs - rhs).abs(),
    })
}
