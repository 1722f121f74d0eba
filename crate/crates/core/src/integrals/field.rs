//! Compactly supported scalar fields with gradients and cached integrals.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, Ball, Vector};
use crate::integrals::profile::RadialProfile;
use crate::quadrature::BallRule;
use crate::sampling::sphere_area;

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vector + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Zero,
    /// `out_scale * g(|x - center| / in_scale)`.
    Radial {
        profile: RadialProfile,
        in_scale: f64,
        out_scale: f64,
    },
    Closure {
        value: ValueFn,
        gradient: GradientFn,
    },
    /// Piecewise-multilinear interpolant of nodal values on a polar grid.
    Grid {
        rule: Arc<BallRule>,
        values: Arc<Vec<f64>>,
    },
}

struct Inner {
    dim: usize,
    support: Ball,
    kind: Kind,
    integral: f64,
    sup_grad: f64,
    rule: OnceLock<Arc<BallRule>>,
}

/// A field on R^d vanishing outside its support ball. Cheap to clone.
#[derive(Clone)]
pub struct ScalarField(Arc<Inner>);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.0.kind {
            Kind::Zero => "zero",
            Kind::Radial { .. } => "radial",
            Kind::Closure { .. } => "closure",
            Kind::Grid { .. } => "grid",
        };
        f.debug_struct("ScalarField")
            .field("kind", &kind)
            .field("support", &self.0.support)
            .finish()
    }
}

/// Resolution of the default quadrature rule used for non-radial fields.
fn default_rule(support: &Ball) -> Result<BallRule> {
    match support.dim() {
        2 => BallRule::new(support.clone(), 8, 16, 256),
        _ => BallRule::new(support.clone(), 4, 12, 64),
    }
}

impl ScalarField {
    fn finish(dim: usize, support: Ball, kind: Kind, rule: Option<Arc<BallRule>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension {
                dim,
                reason: "fields live on R^d with d >= 2",
            });
        }
        let cell = OnceLock::new();
        if let Some(rule) = rule {
            let _ = cell.set(rule);
        }
        let mut field = Self(Arc::new(Inner {
            dim,
            support,
            kind,
            integral: 0.0,
            sup_grad: 0.0,
            rule: cell,
        }));
        let integral = field.power_integral(1)?;
        let sup_grad = field.sampled_sup_grad()?;
        let inner = Arc::get_mut(&mut field.0).unwrap();
        inner.integral = integral;
        inner.sup_grad = sup_grad;
        Ok(field)
    }

    pub fn zero(dim: usize) -> Self {
        Self(Arc::new(Inner {
            dim,
            support: Ball::centered(dim, 0.0),
            kind: Kind::Zero,
            integral: 0.0,
            sup_grad: 0.0,
            rule: OnceLock::new(),
        }))
    }

    /// `out_scale * g(|x - center| / in_scale)`, supported on `B(center, R * in_scale)`.
    pub fn radial(profile: RadialProfile, center: &[f64], in_scale: f64, out_scale: f64) -> Result<Self> {
        if !(in_scale > 0.0) {
            return Err(Error::InvalidArgument(format!("in_scale must be positive, got {in_scale}")));
        }
        let support = Ball::new(center, profile.radius() * in_scale);
        Self::finish(
            center.len(),
            support,
            Kind::Radial {
                profile,
                in_scale,
                out_scale,
            },
            None,
        )
    }

    /// Smooth bump `amplitude * exp(-1 / (1 - |x - center|^2 / radius^2))`.
    pub fn bump(center: &[f64], radius: f64, amplitude: f64) -> Result<Self> {
        Self::radial(RadialProfile::mollifier(), center, radius, amplitude)
    }

    /// Field from closures. The caller guarantees both vanish outside `support`;
    /// values outside are forced to zero regardless.
    pub fn from_fn(support: Ball, value: ValueFn, gradient: GradientFn) -> Result<Self> {
        Self::finish(support.dim(), support, Kind::Closure { value, gradient }, None)
    }

    /// Interpolant of `values` given at the nodes of `rule`.
    pub fn from_grid(rule: Arc<BallRule>, values: Vec<f64>) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a rule with {} nodes",
                values.len(),
                rule.len()
            )));
        }
        let support = rule.ball().clone();
        Self::finish(
            rule.dim(),
            support,
            Kind::Grid {
                rule: rule.clone(),
                values: Arc::new(values),
            },
            Some(rule),
        )
    }

    /// Materializes `f` at the nodes of `rule` (in parallel) and returns the interpolant.
    pub fn materialize(rule: Arc<BallRule>, f: impl Fn(&[f64]) -> Result<f64> + Sync) -> Result<Self> {
        let values: Result<Vec<f64>> = (0..rule.len()).into_par_iter().map(|i| f(rule.point(i))).collect();
        Self::from_grid(rule, values?)
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn support_ball(&self) -> &Ball {
        &self.0.support
    }

    /// Radius of the smallest origin-centred ball containing the support.
    pub fn support_radius(&self) -> f64 {
        self.0.support.outer_radius()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0.kind, Kind::Zero)
    }

    /// `int f dλ`, cached at construction.
    pub fn integral(&self) -> f64 {
        self.0.integral
    }

    /// `sup |∇f|`: exact for radial fields, sampled on the quadrature nodes otherwise.
    pub fn sup_grad_norm(&self) -> f64 {
        self.0.sup_grad
    }

    pub fn radial_parts(&self) -> Option<(&RadialProfile, f64, f64)> {
        match &self.0.kind {
            Kind::Radial {
                profile,
                in_scale,
                out_scale,
            } => Some((profile, *in_scale, *out_scale)),
            _ => None,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.0.kind {
            Kind::Zero => 0.0,
            Kind::Radial {
                profile,
                in_scale,
                out_scale,
            } => out_scale * profile.g(geometry::distance(x, &self.0.support.center) / in_scale),
            Kind::Closure { value, .. } => {
                if self.0.support.contains(x) {
                    value(x)
                } else {
                    0.0
                }
            }
            Kind::Grid { rule, values } => rule
                .stencil(x)
                .map_or(0.0, |st| st.iter().map(|&(i, w)| w * values[i]).sum()),
        }
    }

    /// Gradient. Grid fields use central differences of the interpolant.
    pub fn gradient(&self, x: &[f64]) -> Vector {
        let dim = self.0.dim;
        match &self.0.kind {
            Kind::Zero => geometry::zeros(dim),
            Kind::Radial {
                profile,
                in_scale,
                out_scale,
            } => {
                let rel = geometry::sub(x, &self.0.support.center);
                let r = geometry::norm(&rel);
                if r == 0.0 || r > self.0.support.radius {
                    return geometry::zeros(dim);
                }
                let s = out_scale * profile.gprime(r / in_scale) / (in_scale * r);
                geometry::scaled(&rel, s)
            }
            Kind::Closure { gradient, .. } => {
                if self.0.support.contains(x) {
                    gradient(x)
                } else {
                    geometry::zeros(dim)
                }
            }
            Kind::Grid { .. } => {
                let h = 1e-6 * self.0.support.radius.max(1e-300);
                let mut p: Vector = x.iter().copied().collect();
                (0..dim)
                    .map(|k| {
                        p[k] = x[k] + h;
                        let up = self.value(&p);
                        p[k] = x[k] - h;
                        let down = self.value(&p);
                        p[k] = x[k];
                        (up - down) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    /// Polar quadrature rule on the support ball (the interpolation grid for grid fields).
    pub fn rule(&self) -> Result<&Arc<BallRule>> {
        if let Some(r) = self.0.rule.get() {
            return Ok(r);
        }
        let rule = Arc::new(default_rule(&self.0.support)?);
        Ok(self.0.rule.get_or_init(|| rule))
    }

    /// Nodal values when this is a grid field.
    pub fn grid_values(&self) -> Option<&[f64]> {
        match &self.0.kind {
            Kind::Grid { values, .. } => Some(values),
            _ => None,
        }
    }

    /// `int f^k dλ`.
    pub fn power_integral(&self, k: u32) -> Result<f64> {
        self.generic_power(k, false)
    }

    /// `int |f|^k dλ`.
    pub fn abs_power_integral(&self, k: u32) -> Result<f64> {
        self.generic_power(k, true)
    }

    fn generic_power(&self, k: u32, abs: bool) -> Result<f64> {
        match &self.0.kind {
            Kind::Zero => Ok(0.0),
            Kind::Radial {
                profile,
                in_scale,
                out_scale,
            } => {
                let d = self.0.dim;
                let m = if abs {
                    profile.abs_moment(k, d) * out_scale.abs().powi(k as i32)
                } else {
                    profile.moment(k, d) * out_scale.powi(k as i32)
                };
                Ok(sphere_area(d) * in_scale.powi(d as i32) * m)
            }
            Kind::Grid { rule, values } => Ok(values
                .iter()
                .zip(rule.weights())
                .map(|(v, w)| w * if abs { v.abs().powi(k as i32) } else { v.powi(k as i32) })
                .sum()),
            Kind::Closure { .. } => {
                let rule = self.rule()?;
                Ok(rule.integrate(|x| {
                    let v = self.value(x);
                    if abs {
                        v.abs().powi(k as i32)
                    } else {
                        v.powi(k as i32)
                    }
                }))
            }
        }
    }

    /// `int f g dλ` on this field's quadrature rule.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.weighted_integral(|x| other.value(x))
    }

    /// `int f(x) w(x) dλ(x)` on this field's quadrature rule.
    pub fn weighted_integral(&self, w: impl Fn(&[f64]) -> f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let rule = self.rule()?;
        match &self.0.kind {
            Kind::Grid { values, .. } => Ok((0..rule.len())
                .map(|i| rule.weights()[i] * values[i] * w(rule.point(i)))
                .sum()),
            _ => Ok(rule.integrate(|x| self.value(x) * w(x))),
        }
    }

    pub fn l2_norm(&self) -> Result<f64> {
        Ok(self.power_integral(2)?.sqrt())
    }

    fn sampled_sup_grad(&self) -> Result<f64> {
        match &self.0.kind {
            Kind::Zero => Ok(0.0),
            Kind::Radial {
                profile,
                in_scale,
                out_scale,
            } => Ok(out_scale.abs() * profile.sup_gprime() / in_scale),
            _ => {
                let rule = self.rule()?;
                Ok((0..rule.len())
                    .into_par_iter()
                    .map(|i| geometry::norm(&self.gradient(rule.point(i))))
                    .reduce(|| 0.0, f64::max))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn radial_gradient_matches_finite_differences() {
        let f = ScalarField::radial(RadialProfile::g_balanced(2), &[0.1, -0.2], 0.7, 1.3).unwrap();
        for &(x, y) in &[(0.3, 0.1), (-0.2, -0.5), (0.5, 0.0)] {
            let p = [x, y];
            let g = f.gradient(&p);
            for k in 0..2 {
                let h = 1e-6;
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                let fd = (f.value(&a) - f.value(&b)) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-5 * (1.0 + g[k].abs()));
            }
        }
    }

    #[test]
    fn radial_integrals_agree_with_polar_rule() {
        let f = ScalarField::radial(RadialProfile::g_plus(), &[0.2, 0.0], 0.8, 2.0).unwrap();
        let rule = f.rule().unwrap();
        for k in 1..=4 {
            let quad = rule.integrate(|x| f.value(x).powi(k as i32));
            let exact = f.power_integral(k).unwrap();
            assert!((quad - exact).abs() < 1e-9 * exact.abs().max(1.0), "k = {k}");
        }
        // Closed form: 2π · 2 · 0.64 · (1/12 - 1/... ) for k = 1: int_0^1 r(1-r) r dr = 1/12.
        assert!((f.integral() - 2.0 * PI * 0.64 * 2.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn closure_field_matches_radial_equivalent() {
        let radial = ScalarField::bump(&[0.0, 0.0], 0.5, 1.0).unwrap();
        let r2 = radial.clone();
        let r3 = radial.clone();
        let closure = ScalarField::from_fn(
            Ball::centered(2, 0.5),
            Arc::new(move |x| r2.value(x)),
            Arc::new(move |x| r3.gradient(x)),
        )
        .unwrap();
        assert!((closure.integral() - radial.integral()).abs() < 1e-9);
        assert!((closure.sup_grad_norm() - radial.sup_grad_norm()).abs() < 1e-2 * radial.sup_grad_norm());
    }

    #[test]
    fn grid_field_reproduces_smooth_function() {
        let f = ScalarField::bump(&[0.1, 0.1], 0.6, 1.0).unwrap();
        let rule = Arc::new(BallRule::new(Ball::new(&[0.1, 0.1], 0.6), 4, 12, 96).unwrap());
        let g = ScalarField::materialize(rule, |x| Ok(f.value(x))).unwrap();
        assert!((g.integral() - f.integral()).abs() < 1e-6 * f.integral(), "{} vs {}", g.integral(), f.integral());
        for &p in &[[0.2, 0.3], [0.0, 0.0], [0.4, -0.1]] {
            assert!((g.value(&p) - f.value(&p)).abs() < 5e-3 * f.value(&[0.1, 0.1]));
        }
        assert_eq!(g.value(&[2.0, 0.0]), 0.0);
    }
}
