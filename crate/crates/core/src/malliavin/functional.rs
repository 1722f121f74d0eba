//! Cylindrical functionals `F = φ(<h_1, γ>, ..., <h_m, γ>)` and their gradient.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry;
use crate::integrals::{atom_sum, check_support, ScalarField};
use crate::kernel::KernelEvaluator;
use crate::sampling::Configuration;

pub type MapFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type PartialFn = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

/// A smooth map R^m -> R with its partial derivatives.
#[derive(Clone)]
pub struct SmoothMap {
    arity: usize,
    value: MapFn,
    partial: PartialFn,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap").field("arity", &self.arity).finish()
    }
}

impl SmoothMap {
    pub fn new(arity: usize, value: MapFn, partial: PartialFn) -> Self {
        Self { arity, value, partial }
    }

    pub fn constant(c: f64, arity: usize) -> Self {
        Self::new(arity, Arc::new(move |_| c), Arc::new(|_, _| 0.0))
    }

    pub fn identity() -> Self {
        Self::new(1, Arc::new(|s| s[0]), Arc::new(|_, _| 1.0))
    }

    pub fn sine() -> Self {
        Self::new(1, Arc::new(|s| s[0].sin()), Arc::new(|s, _| s[0].cos()))
    }

    pub fn cosine() -> Self {
        Self::new(1, Arc::new(|s| s[0].cos()), Arc::new(|s, _| -s[0].sin()))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        (self.value)(s)
    }

    pub fn partial(&self, s: &[f64], j: usize) -> f64 {
        (self.partial)(s, j)
    }
}

/// `F(γ) = φ(sum_i h_1(X_i), ..., sum_i h_m(X_i))`.
#[derive(Debug, Clone)]
pub struct CylindricalFunctional {
    phi: SmoothMap,
    fields: Vec<ScalarField>,
}

impl CylindricalFunctional {
    pub fn new(phi: SmoothMap, fields: Vec<ScalarField>) -> Result<Self> {
        if phi.arity() != fields.len() {
            return Err(Error::InvalidArgument(format!(
                "map of arity {} applied to {} fields",
                phi.arity(),
                fields.len()
            )));
        }
        Ok(Self { phi, fields })
    }

    /// The constant functional.
    pub fn constant(c: f64) -> Self {
        Self {
            phi: SmoothMap::constant(c, 0),
            fields: Vec::new(),
        }
    }

    /// `<h, γ>`.
    pub fn linear(h: ScalarField) -> Self {
        Self {
            phi: SmoothMap::identity(),
            fields: vec![h],
        }
    }

    pub fn phi(&self) -> &SmoothMap {
        &self.phi
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    /// Largest first coordinate reached by the supports of the fields.
    pub fn max_first_coordinate(&self) -> f64 {
        self.fields
            .iter()
            .filter(|h| !h.is_zero())
            .map(|h| h.support_ball().center[0] + h.support_ball().radius)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_carrier(&self, cfg: &Configuration) -> Result<()> {
        self.fields.iter().try_for_each(|h| check_support(h, cfg.radius()))
    }

    /// Arguments `<h_j, γ>`.
    pub fn arguments(&self, cfg: &Configuration) -> Vec<f64> {
        self.fields.iter().map(|h| atom_sum(h, cfg)).collect()
    }

    pub fn eval(&self, cfg: &Configuration) -> f64 {
        self.phi.value(&self.arguments(cfg))
    }

    /// Partial derivatives of φ at the current arguments.
    pub fn partials(&self, cfg: &Configuration) -> Vec<f64> {
        let s = self.arguments(cfg);
        (0..self.fields.len()).map(|j| self.phi.partial(&s, j)).collect()
    }
}

/// `D_y F = sum_j ∂_j φ sum_i <G(X_i, y), ∇h_j(X_i)>`, skipping atoms within
/// the excision radius of `y`.
pub fn gradient_d(ke: &KernelEvaluator, f: &CylindricalFunctional, cfg: &Configuration, y: &[f64]) -> Result<f64> {
    if f.fields.is_empty() {
        return Ok(0.0);
    }
    let partials = f.partials(cfg);
    let eps = ke.epsilon();
    let mut total = 0.0;
    for x in cfg.points() {
        if geometry::distance(x, y) < eps {
            continue;
        }
        let mut kernel = None;
        for (h, p) in f.fields.iter().zip(&partials) {
            if *p == 0.0 || !h.support_ball().contains(x) {
                continue;
            }
            if kernel.is_none() {
                kernel = Some(ke.eval(x, y)?);
            }
            total += p * geometry::dot(kernel.as_ref().unwrap(), &h.gradient(x));
        }
    }
    Ok(total)
}
