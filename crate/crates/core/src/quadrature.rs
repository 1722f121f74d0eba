//! Quadrature building blocks: cached Gauss-Legendre rules, adaptive Simpson,
//! direction rules on circles/spheres and caps, and a polar product rule on
//! balls that doubles as an interpolation grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::geometry::{self, Ball, Vector};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending. Rules are computed
/// once per size and kept for the lifetime of the process.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static [(f64, f64)]>>> = OnceLock::new();
    let n = n.max(1);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    if let Some(rule) = guard.get(&n) {
        return rule;
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(n).unwrap());
    let mut pairs = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let leaked: &'static [(f64, f64)] = Box::leak(pairs.into_boxed_slice());
    guard.insert(n, leaked);
    leaked
}

/// Nodes and weights of an `n`-point rule mapped to [a, b].
pub fn mapped_nodes(n: usize, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    gauss_legendre(n)
        .iter()
        .map(move |&(x, w)| (mid + half * x, half * w))
}

pub fn gl_integrate(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    mapped_nodes(n, a, b).map(|(x, w)| w * f(x)).sum()
}

/// Composite rule: `panels` equal panels with `n` nodes each.
pub fn composite_nodes(panels: usize, n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| mapped_nodes(n, a + p as f64 * h, a + (p + 1) as f64 * h))
        .collect()
}

pub fn composite_gl(panels: usize, n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    composite_nodes(panels, n, a, b)
        .into_iter()
        .map(|(x, w)| w * f(x))
        .sum()
}

/// Adaptive Simpson on [a, b] with relative tolerance `rel_tol` and an absolute floor.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // A coarse pass fixes the absolute target so that tiny integrals do not recurse forever.
    let coarse = composite_gl(8, 8, a, b, |x| f(x).abs());
    let tol = (rel_tol * coarse).max(abs_floor);
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// A weighted set of unit directions.
pub type DirectionRule = Vec<(Vector, f64)>;

fn unsupported(dim: usize) -> Error {
    Error::UnsupportedDimension {
        dim,
        reason: "angular quadrature is implemented for d = 2 and d = 3",
    }
}

/// Orthonormal frame whose first vector is `axis` (|axis| = 1), d = 3.
fn frame3(axis: &[f64]) -> [[f64; 3]; 3] {
    let a = [axis[0], axis[1], axis[2]];
    let helper = if a[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let proj = helper[0] * a[0] + helper[1] * a[1] + helper[2] * a[2];
    let mut b = [
        helper[0] - proj * a[0],
        helper[1] - proj * a[1],
        helper[2] - proj * a[2],
    ];
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    b.iter_mut().for_each(|v| *v /= nb);
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    [a, b, c]
}

/// Rule on the whole unit sphere S^{d-1}. `n` is the number of azimuthal nodes;
/// d = 3 adds `n / 2` Gauss nodes in the polar cosine.
pub fn sphere_directions(dim: usize, n: usize) -> Result<DirectionRule> {
    let n = n.max(4);
    match dim {
        2 => {
            let w = 2.0 * PI / n as f64;
            Ok((0..n)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / n as f64;
                    (Vector::from_slice(&[t.cos(), t.sin()]), w)
                })
                .collect())
        }
        3 => {
            let wphi = 2.0 * PI / n as f64;
            let mut out = Vec::with_capacity(n * n / 2);
            for &(mu, wmu) in gauss_legendre(n / 2) {
                let s = (1.0 - mu * mu).sqrt();
                for j in 0..n {
                    let phi = 2.0 * PI * j as f64 / n as f64;
                    out.push((
                        Vector::from_slice(&[s * phi.cos(), s * phi.sin(), mu]),
                        wmu * wphi,
                    ));
                }
            }
            Ok(out)
        }
        _ => Err(unsupported(dim)),
    }
}

/// Rule on the spherical cap of directions within `half_angle` of `axis`.
pub fn cap_directions(dim: usize, axis: &[f64], half_angle: f64, n: usize) -> Result<DirectionRule> {
    let n = n.max(4);
    match dim {
        2 => {
            let phi0 = axis[1].atan2(axis[0]);
            Ok(mapped_nodes(n, phi0 - half_angle, phi0 + half_angle)
                .map(|(t, w)| (Vector::from_slice(&[t.cos(), t.sin()]), w))
                .collect())
        }
        3 => {
            let [a, b, c] = frame3(axis);
            let wphi = 2.0 * PI / n as f64;
            let mut out = Vec::with_capacity(n * n / 2);
            for (theta, wt) in mapped_nodes(n / 2, 0.0, half_angle) {
                let (st, ct) = theta.sin_cos();
                for j in 0..n {
                    let (sp, cp) = (2.0 * PI * j as f64 / n as f64).sin_cos();
                    let dir: Vector = (0..3)
                        .map(|k| ct * a[k] + st * (cp * b[k] + sp * c[k]))
                        .collect();
                    out.push((dir, wt * st * wphi));
                }
            }
            Ok(out)
        }
        _ => Err(unsupported(dim)),
    }
}

/// Directions from `from` along which rays can meet `target`. Returns a cap
/// rule when `from` lies outside the ball and a full-sphere rule otherwise.
pub fn directions_toward(from: &[f64], target: &Ball, n: usize) -> Result<DirectionRule> {
    let dim = from.len();
    let rel = geometry::sub(&target.center, from);
    let dist = geometry::norm(&rel);
    if dist <= target.radius * (1.0 + 1e-12) {
        return sphere_directions(dim, 2 * n);
    }
    let axis = geometry::scaled(&rel, 1.0 / dist);
    let half = (target.radius / dist).asin();
    cap_directions(dim, &axis, half, n)
}

/// Angular layout of a [`BallRule`].
#[derive(Debug, Clone)]
enum AngularLayout {
    /// `n` equispaced angles starting at 0.
    Circle { n: usize },
    /// Gauss nodes in the polar cosine (ascending) times `n_phi` equispaced azimuths.
    Sphere { mu: Vec<f64>, n_phi: usize },
}

/// Polar product rule on a ball: composite Gauss-Legendre in the radius times
/// a direction rule. The nodes form a tensor grid, so the rule also serves as
/// the support of piecewise-linear interpolants.
#[derive(Debug, Clone)]
pub struct BallRule {
    ball: Ball,
    radii: Vec<f64>,
    layout: AngularLayout,
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Interpolation stencil: node indices with multilinear weights.
pub type Stencil = smallvec::SmallVec<[(usize, f64); 8]>;

impl BallRule {
    /// `panels` radial panels of `nodes` Gauss points each, `angular` azimuthal nodes.
    pub fn new(ball: Ball, panels: usize, nodes: usize, angular: usize) -> Result<Self> {
        let dim = ball.dim();
        let radial = composite_nodes(panels, nodes, 0.0, ball.radius);
        let dirs = match dim {
            2 | 3 => sphere_directions(dim, angular)?,
            _ => return Err(unsupported(dim)),
        };
        let layout = if dim == 2 {
            AngularLayout::Circle { n: dirs.len() }
        } else {
            let n_phi = angular.max(4);
            AngularLayout::Sphere {
                mu: gauss_legendre(n_phi / 2).iter().map(|p| p.0).collect(),
                n_phi,
            }
        };
        let mut points = Vec::with_capacity(radial.len() * dirs.len() * dim);
        let mut weights = Vec::with_capacity(radial.len() * dirs.len());
        for &(r, wr) in &radial {
            let wr = wr * r.powi(dim as i32 - 1);
            for (dir, wd) in &dirs {
                points.extend(ball.center.iter().zip(dir).map(|(c, u)| c + r * u));
                weights.push(wr * wd);
            }
        }
        Ok(Self {
            ball,
            radii: radial.iter().map(|p| p.0).collect(),
            layout,
            points,
            weights,
        })
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn dim(&self) -> usize {
        self.ball.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.point(i))).sum()
    }

    fn n_angular(&self) -> usize {
        match &self.layout {
            AngularLayout::Circle { n } => *n,
            AngularLayout::Sphere { mu, n_phi } => mu.len() * n_phi,
        }
    }

    /// Multilinear interpolation stencil for `x`, or `None` outside the ball.
    /// Radii are clamped to the outermost nodes; azimuths are periodic.
    pub fn stencil(&self, x: &[f64]) -> Option<Stencil> {
        let rel = geometry::sub(x, &self.ball.center);
        let r = geometry::norm(&rel);
        if r > self.ball.radius {
            return None;
        }
        let (ir, tr) = bracket(&self.radii, r);
        let n_ang = self.n_angular();
        let mut ang: smallvec::SmallVec<[(usize, f64); 4]> = smallvec::SmallVec::new();
        match &self.layout {
            AngularLayout::Circle { n } => {
                let (j0, j1, t) = periodic(rel[1].atan2(rel[0]), *n);
                ang.push((j0, 1.0 - t));
                ang.push((j1, t));
            }
            AngularLayout::Sphere { mu, n_phi } => {
                let (cos_t, phi) = if r > 0.0 {
                    (rel[2] / r, rel[1].atan2(rel[0]))
                } else {
                    (0.0, 0.0)
                };
                let (im, tm) = bracket(mu, cos_t);
                let (j0, j1, tp) = periodic(phi, *n_phi);
                for (m, wm) in [(im, 1.0 - tm), (im + 1, tm)] {
                    if wm == 0.0 {
                        continue;
                    }
                    let m = m.min(mu.len() - 1);
                    ang.push((m * n_phi + j0, wm * (1.0 - tp)));
                    ang.push((m * n_phi + j1, wm * tp));
                }
            }
        }
        let mut out = Stencil::new();
        for (i, wi) in [(ir, 1.0 - tr), (ir + 1, tr)] {
            if wi == 0.0 {
                continue;
            }
            let i = i.min(self.radii.len() - 1);
            for &(a, wa) in &ang {
                out.push((i * n_ang + a, wi * wa));
            }
        }
        Some(out)
    }
}

/// Index `i` and fraction `t` with `x` between `nodes[i]` and `nodes[i + 1]`,
/// clamped at both ends.
fn bracket(nodes: &[f64], x: f64) -> (usize, f64) {
    let last = nodes.len() - 1;
    if x <= nodes[0] {
        return (0, 0.0);
    }
    if x >= nodes[last] {
        return (last, 0.0);
    }
    let i = nodes.partition_point(|&v| v <= x) - 1;
    (i, (x - nodes[i]) / (nodes[i + 1] - nodes[i]))
}

fn periodic(angle: f64, n: usize) -> (usize, usize, f64) {
    let u = angle.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
    let j = (u.floor() as usize).min(n - 1);
    (j, (j + 1) % n, u - j as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let v = gl_integrate(5, 0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        let nodes = gauss_legendre(7);
        assert!(nodes.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn simpson_matches_closed_form() {
        let v = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-10, 1e-14);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn sphere_rules_integrate_moments() {
        let c2: f64 = sphere_directions(2, 64).unwrap().iter().map(|(u, w)| w * u[0] * u[0]).sum();
        assert!((c2 - PI).abs() < 1e-12);
        let s3 = sphere_directions(3, 32).unwrap();
        let area: f64 = s3.iter().map(|p| p.1).sum();
        let z2: f64 = s3.iter().map(|(u, w)| w * u[2] * u[2]).sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!(sphere_directions(4, 8).is_err());
    }

    #[test]
    fn cap_area_matches_closed_form() {
        let alpha = 0.4;
        let a2: f64 = cap_directions(2, &[0.0, 1.0], alpha, 16).unwrap().iter().map(|p| p.1).sum();
        assert!((a2 - 2.0 * alpha).abs() < 1e-13);
        let axis = [0.6, 0.0, 0.8];
        let cap = cap_directions(3, &axis, alpha, 32).unwrap();
        let a3: f64 = cap.iter().map(|p| p.1).sum();
        assert!((a3 - 2.0 * PI * (1.0 - alpha.cos())).abs() < 1e-12);
        assert!(cap.iter().all(|(u, _)| geometry::dot(u, &axis) >= alpha.cos() - 1e-12));
    }

    #[test]
    fn ball_rule_volume_and_interpolation() {
        let rule = BallRule::new(Ball::new(&[0.3, -0.2], 0.5), 2, 8, 32).unwrap();
        let vol = rule.integrate(|_| 1.0);
        assert!((vol - PI * 0.25).abs() < 1e-12);
        // Linear functions of the node coordinates are reproduced up to the
        // chord-vs-arc error of the angular interpolation.
        let st = rule.stencil(&[0.4, 0.0]).unwrap();
        let wsum: f64 = st.iter().map(|p| p.1).sum();
        assert!((wsum - 1.0).abs() < 1e-12);
        assert!(rule.stencil(&[2.0, 0.0]).is_none());

        let rule3 = BallRule::new(Ball::centered(3, 1.0), 2, 6, 16).unwrap();
        let vol3 = rule3.integrate(|_| 1.0);
        assert!((vol3 - 4.0 * PI / 3.0).abs() < 1e-10);
    }
}
