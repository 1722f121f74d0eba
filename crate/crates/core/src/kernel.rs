//! The divergence-inverting kernel `G(x, y)` built from a mollifier η placed
//! outside `B(R)`.
//!
//! With `t = 1/s` the kernel reads
//!
//! ```text
//! G(x, y) = int_1^inf t^{d-1} (y - x) η(y + t (x - y)) dt
//! ```
//!
//! and is oriented so that `h(y) = int <G(x, y), ∇h(x)> dx` for every smooth
//! `h` supported in `B(R)`. `G(x, y)` only sees η along the ray leaving `y`
//! through `x`, so it vanishes whenever that ray misses the support of η. With
//! η supported in `{x_1 > R}` this makes `G(x, y) = 0` for `x_1 <= y_1`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, Ball, Vector};
use crate::integrals::ScalarField;
use crate::quadrature::{composite_nodes, directions_toward, mapped_nodes};
use crate::sampling::{derive_seed, rng_from_seed, uniform_in_ball};

/// Separation below which two points are treated as coincident.
pub const COINCIDENT_TOL: f64 = 1e-12;

/// Safety factor applied to the sampled supremum when estimating K_d.
pub const KD_SAFETY: f64 = 1.2;

/// Unit-mass mollifier `A exp(-1 / (1 - |z|^2))`, `z = (x - center) / rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFunction {
    center: Vector,
    rho: f64,
    amplitude: f64,
}

/// `int_0^1 exp(-1 / (1 - u^2)) u^{d-1} du`.
fn mollifier_radial_mass(dim: usize) -> f64 {
    let f = |u: f64| {
        let q = 1.0 - u * u;
        if q > 0.0 {
            (-1.0 / q).exp() * u.powi(dim as i32 - 1)
        } else {
            0.0
        }
    };
    composite_nodes(16, 32, 0.0, 1.0).into_iter().map(|(u, w)| w * f(u)).sum()
}

impl BumpFunction {
    pub fn new(center: &[f64], rho: f64) -> Result<Self> {
        let dim = center.len();
        if dim < 2 {
            return Err(Error::UnsupportedDimension {
                dim,
                reason: "the kernel is built for d >= 2",
            });
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidPlacement(format!("radius must be positive, got {rho}")));
        }
        let surface = crate::sampling::sphere_area(dim);
        let amplitude = 1.0 / (surface * rho.powi(dim as i32) * mollifier_radial_mass(dim));
        Ok(Self {
            center: center.iter().copied().collect(),
            rho,
            amplitude,
        })
    }

    /// Default placement for data on `B(R)`: centre `(3R/2, 0, ...)`, radius `R/4`.
    pub fn standard(dim: usize, radius: f64) -> Result<Self> {
        let mut c = geometry::zeros(dim);
        c[0] = 1.5 * radius;
        Self::new(&c, 0.25 * radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn support(&self) -> Ball {
        Ball::new(&self.center, self.rho)
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut z2 = 0.0;
        for (a, c) in x.iter().zip(&self.center) {
            let t = a - c;
            z2 += t * t;
        }
        let q = 1.0 - z2 / (self.rho * self.rho);
        if q > 0.0 {
            self.amplitude * (-1.0 / q).exp()
        } else {
            0.0
        }
    }

    /// Checks that the support lies in `B(2R) \ B(R)` and in the half-space `{x_1 >= R}`.
    pub fn check_placement(&self, radius: f64) -> Result<()> {
        let outer = geometry::norm(&self.center) + self.rho;
        if outer > 2.0 * radius * (1.0 + 1e-12) {
            return Err(Error::InvalidPlacement(format!(
                "support reaches |x| = {outer}, beyond 2R = {}",
                2.0 * radius
            )));
        }
        let lowest = self.center[0] - self.rho;
        if lowest < radius * (1.0 - 1e-12) {
            return Err(Error::InvalidPlacement(format!(
                "support reaches first coordinate {lowest} <= R = {radius}"
            )));
        }
        Ok(())
    }

    /// The same bump with all lengths multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let c = geometry::scaled(&self.center, factor);
        Self::new(&c, self.rho * factor)
    }
}

pub fn eval_eta(eta: &BumpFunction, x: &[f64]) -> f64 {
    eta.value(x)
}

/// Node counts and tolerances for all kernel quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePolicy {
    /// Starting Gauss-Legendre size for ray integrals of η.
    pub nodes: usize,
    /// Relative change at which node doubling stops.
    pub tol: f64,
    /// Largest ray rule before giving up.
    pub max_nodes: usize,
    /// Excised radius around the diagonal, as a fraction of R.
    pub epsilon_rel: f64,
    /// Angular nodes for directional integrals.
    pub angular_nodes: usize,
    /// Radial panels and nodes per panel along chords.
    pub radial_panels: usize,
    pub radial_nodes: usize,
    /// Resolution of the grids on which operator iterates are stored.
    pub grid_panels: usize,
    pub grid_nodes: usize,
    pub grid_angular: usize,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        Self {
            nodes: 64,
            tol: 1e-8,
            max_nodes: 1024,
            epsilon_rel: 1e-3,
            angular_nodes: 32,
            radial_panels: 4,
            radial_nodes: 12,
            grid_panels: 4,
            grid_nodes: 12,
            grid_angular: 96,
        }
    }
}

/// Kernel together with its mollifier, data radius R and quadrature policy.
/// Immutable once K_d has been estimated; clone freely across workers.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    eta: BumpFunction,
    radius: f64,
    policy: QuadraturePolicy,
    kd: f64,
}

impl KernelEvaluator {
    /// Evaluator with the default mollifier for `B(radius)`.
    pub fn new(dim: usize, radius: f64, policy: QuadraturePolicy) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Self::with_eta(BumpFunction::standard(dim, radius)?, radius, policy)
    }

    pub fn with_eta(eta: BumpFunction, radius: f64, policy: QuadraturePolicy) -> Result<Self> {
        eta.check_placement(radius)?;
        Self::with_eta_unchecked(eta, radius, policy)
    }

    /// Skips the placement check. Used to build deliberately broken kernels.
    pub fn with_eta_unchecked(eta: BumpFunction, radius: f64, policy: QuadraturePolicy) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if policy.nodes == 0 || policy.max_nodes < policy.nodes || !(policy.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid quadrature policy {policy:?}")));
        }
        Ok(Self {
            eta,
            radius,
            policy,
            kd: 0.0,
        })
    }

    /// Evaluator for data radius `radius` with the mollifier scaled by `radius / R`.
    /// `|G(x, y)| |x - y|^{d-1}` is invariant under this scaling, so K_d carries over.
    pub fn rescaled(&self, radius: f64) -> Result<Self> {
        let factor = radius / self.radius;
        let mut ke = Self::with_eta_unchecked(self.eta.rescaled(factor)?, radius, self.policy)?;
        ke.kd = self.kd;
        Ok(ke)
    }

    pub fn dim(&self) -> usize {
        self.eta.dim()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `R' = 2R`.
    pub fn outer_radius(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn eta(&self) -> &BumpFunction {
        &self.eta
    }

    pub fn policy(&self) -> &QuadraturePolicy {
        &self.policy
    }

    pub fn kd_empirical(&self) -> f64 {
        self.kd
    }

    pub fn set_kd(&mut self, kd: f64) {
        self.kd = kd;
    }

    /// Excision radius `ε = epsilon_rel * R`.
    pub fn epsilon(&self) -> f64 {
        self.policy.epsilon_rel * self.radius
    }

    /// `out[j] = int_{s >= s_min} s^j η(p + s dir) ds` for `j < out.len()`,
    /// by Gauss-Legendre on the exact chord of the ray with the support of η,
    /// doubling the node count until the relative change is below `tol`.
    pub(crate) fn ray_moments(&self, p: &[f64], dir: &[f64], s_min: f64, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        let Some((a, b)) = self.eta.support().ray_segment(p, dir, s_min) else {
            return Ok(());
        };
        let mut n = self.policy.nodes;
        let mut prev = [0.0f64; 8];
        let m = out.len();
        debug_assert!(m <= 8);
        self.moments_with(n, p, dir, a, b, &mut prev[..m]);
        loop {
            n *= 2;
            if n > self.policy.max_nodes {
                return Err(Error::QuadratureBudgetExceeded {
                    tol: self.policy.tol,
                    max_nodes: self.policy.max_nodes,
                });
            }
            self.moments_with(n, p, dir, a, b, out);
            let scale = out.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let change = out
                .iter()
                .zip(&prev[..m])
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
            if change <= self.policy.tol * scale || scale < 1e-300 {
                return Ok(());
            }
            prev[..m].copy_from_slice(out);
        }
    }

    fn moments_with(&self, n: usize, p: &[f64], dir: &[f64], a: f64, b: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut x: Vector = geometry::zeros(p.len());
        for (s, w) in mapped_nodes(n, a, b) {
            for k in 0..p.len() {
                x[k] = p[k] + s * dir[k];
            }
            let mut term = w * self.eta.value(&x);
            if term == 0.0 {
                continue;
            }
            for v in out.iter_mut() {
                *v += term;
                term *= s;
            }
        }
    }

    /// `G(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vector> {
        let v = geometry::sub(x, y);
        let r = geometry::norm(&v);
        if r < COINCIDENT_TOL {
            return Err(Error::CoincidentPoints { distance: r });
        }
        let d = self.dim();
        let omega = geometry::scaled(&v, 1.0 / r);
        let mut mom = [0.0f64; 8];
        self.ray_moments(y, &omega, r, &mut mom[..d])?;
        let tail = mom[d - 1];
        Ok(geometry::scaled(&omega, -tail / r.powi(d as i32 - 1)))
    }

    /// Raw supremum of `|G(x, y)| |x - y|^{d-1}` over the given pairs.
    pub fn scaled_kernel_sup(&self, pairs: &[(Vector, Vector)]) -> f64 {
        pairs
            .par_iter()
            .map(|(x, y)| match self.eval(x, y) {
                Ok(g) => geometry::norm(&g) * geometry::distance(x, y).powi(self.dim() as i32 - 1),
                Err(Error::CoincidentPoints { .. }) => 0.0,
                Err(e) => {
                    log::warn!("kernel evaluation failed while estimating K_d: {e}");
                    0.0
                }
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `n_pairs` pairs drawn uniformly from `B(R')`, deterministic in `seed`.
    pub fn random_pairs(&self, n_pairs: usize, seed: u64) -> Vec<(Vector, Vector)> {
        let d = self.dim();
        let rp = self.outer_radius();
        (0..n_pairs)
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(seed, i as u64));
                let mut x = geometry::zeros(d);
                let mut y = geometry::zeros(d);
                uniform_in_ball(&mut rng, rp, &mut x);
                uniform_in_ball(&mut rng, rp, &mut y);
                (x, y)
            })
            .collect()
    }

    /// Estimates K_d as `1.2 * sup |G(x, y)| |x - y|^{d-1}` over random pairs
    /// in `B(R')`, stores it and returns it.
    pub fn estimate_kd(&mut self, n_pairs: usize, seed: u64) -> f64 {
        let pairs = self.random_pairs(n_pairs, seed);
        self.kd = KD_SAFETY * self.scaled_kernel_sup(&pairs);
        self.kd
    }

    /// `int <G(x, y), ∇h(x)> dx`, in polar coordinates around `y` restricted
    /// to the directions whose rays reach η, excising `B(y, ε)`.
    pub fn kernel_gradient_integral(&self, h: &ScalarField, y: &[f64]) -> Result<f64> {
        if h.is_zero() {
            return Ok(0.0);
        }
        let d = self.dim();
        let eps = self.epsilon();
        let hb = h.support_ball();
        let mut total = 0.0;
        for (omega, wd) in directions_toward(y, &self.eta.support(), self.policy.angular_nodes)? {
            let Some((a, b)) = hb.ray_segment(y, &omega, eps) else {
                continue;
            };
            let mut sum = 0.0;
            for (rho, wr) in composite_nodes(self.policy.radial_panels, self.policy.radial_nodes, a, b) {
                let x = geometry::along(y, &omega, rho);
                let g = self.eval(&x, y)?;
                sum += wr * rho.powi(d as i32 - 1) * geometry::dot(&g, &h.gradient(&x));
            }
            total += wd * sum;
        }
        Ok(total)
    }
}

pub fn eval_kernel(ke: &KernelEvaluator, x: &[f64], y: &[f64]) -> Result<Vector> {
    ke.eval(x, y)
}

pub fn estimate_kd(ke: &mut KernelEvaluator, n_pairs: usize, seed: u64) -> f64 {
    ke.estimate_kd(n_pairs, seed)
}

/// `max_y |h(y) - int <G(x, y), ∇h(x)> dx|` over the probes.
pub fn verify_divergence_identity(ke: &KernelEvaluator, h: &ScalarField, probes: &[Vector]) -> Result<f64> {
    let errs: Result<Vec<f64>> = probes
        .par_iter()
        .map(|y| Ok((h.value(y) - ke.kernel_gradient_integral(h, y)?).abs()))
        .collect();
    Ok(errs?.into_iter().fold(0.0, f64::max))
}

/// The vector field `V(x) = int G(x, y) g(y) dy`.
#[derive(Debug, Clone)]
pub struct KernelImage {
    ke: KernelEvaluator,
    g: ScalarField,
}

pub fn apply_kernel(ke: &KernelEvaluator, g: &ScalarField) -> KernelImage {
    KernelImage {
        ke: ke.clone(),
        g: g.clone(),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl KernelImage {
    pub fn source(&self) -> &ScalarField {
        &self.g
    }

    /// `V(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vector> {
        if self.g.is_zero() {
            return Ok(geometry::zeros(self.ke.dim()));
        }
        Ok(RayBundle::at(&self.ke, x)?.apply(&self.ke, x, &self.g))
    }

    /// `||V||_{L^2(B(R'))}^2` on a polar rule over `B(R')`.
    pub fn l2_norm_sq(&self, panels: usize, nodes: usize, angular: usize) -> Result<f64> {
        let rule = crate::quadrature::BallRule::new(
            Ball::centered(self.ke.dim(), self.ke.outer_radius()),
            panels,
            nodes,
            angular,
        )?;
        let vals: Result<Vec<f64>> = (0..rule.len())
            .into_par_iter()
            .map(|i| {
                let v = self.eval(rule.point(i))?;
                Ok(rule.weights()[i] * geometry::dot(&v, &v))
            })
            .collect();
        Ok(vals?.into_iter().sum())
    }
}

/// One direction of a [`RayBundle`]: `omega`, its angular weight, and the
/// ray moments `M_j = int_0^inf s^j η(x - s omega) ds`, `j < d`.
#[derive(Debug, Clone)]
struct RayDir {
    omega: Vector,
    weight: f64,
    moments: [f64; 8],
}

/// Kernel data attached to a point `x`: every direction along which the
/// kernel `y -> G(x, y)` can be nonzero, with the η ray moments that
/// determine it. In polar coordinates `y = x + ρω`,
/// `ρ^{d-1} G(x, y) = ω sum_j C(d-1, j) ρ^j M_{d-1-j}(ω)`, so applying the
/// kernel to any `g` only needs one radial integral of `g` per direction.
#[derive(Debug, Clone)]
pub struct RayBundle {
    dirs: Vec<RayDir>,
}

impl RayBundle {
    pub fn at(ke: &KernelEvaluator, x: &[f64]) -> Result<Self> {
        let d = ke.dim();
        let mut dirs = Vec::new();
        // Directions ω with -ω pointing at η.
        for (back, weight) in directions_toward(x, &ke.eta.support(), ke.policy.angular_nodes)? {
            let mut moments = [0.0f64; 8];
            ke.ray_moments(x, &back, 0.0, &mut moments[..d])?;
            if moments[..d].iter().all(|&m| m == 0.0) {
                continue;
            }
            dirs.push(RayDir {
                omega: geometry::scaled(&back, -1.0),
                weight,
                moments,
            });
        }
        Ok(Self { dirs })
    }

    /// `int G(x, y) g(y) dy` over `|y - x| >= ε`.
    pub fn apply(&self, ke: &KernelEvaluator, x: &[f64], g: &ScalarField) -> Vector {
        let d = ke.dim();
        let mut out = geometry::zeros(d);
        if g.is_zero() {
            return out;
        }
        let policy = ke.policy;
        let gb = g.support_ball();
        let mut rad = [0.0f64; 8];
        for dir in &self.dirs {
            let Some((a, b)) = gb.ray_segment(x, &dir.omega, ke.epsilon()) else {
                continue;
            };
            rad[..d].iter_mut().for_each(|v| *v = 0.0);
            for (rho, wr) in composite_nodes(policy.radial_panels, policy.radial_nodes, a, b) {
                let mut term = wr * g.value(&geometry::along(x, &dir.omega, rho));
                for v in rad[..d].iter_mut() {
                    *v += term;
                    term *= rho;
                }
            }
            let scalar: f64 = (0..d)
                .map(|j| binomial(d - 1, j) * rad[j] * dir.moments[d - 1 - j])
                .sum();
            for k in 0..d {
                out[k] += dir.weight * scalar * dir.omega[k];
            }
        }
        out
    }
}

/// `K_d v_d R'`, the L^p operator-norm constant of the kernel.
pub fn operator_constant(ke: &KernelEvaluator) -> f64 {
    let d = ke.dim() as f64;
    let vd = PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0);
    ke.kd_empirical() * vd * ke.outer_radius()
}
