//! Radial profiles g on [0, R] with g(R) = 0.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    /// Polynomial pieces in ascending powers of r on `[breaks[i], breaks[i + 1]]`.
    Piecewise {
        breaks: Vec<f64>,
        pieces: Vec<Vec<f64>>,
    },
    /// `exp(-1 / (1 - r^2))` on [0, 1].
    Mollifier,
    Custom {
        g: ProfileFn,
        gprime: ProfileFn,
    },
}

struct Inner {
    name: String,
    radius: f64,
    shape: Shape,
    sup_gprime: f64,
}

/// A C^1 profile on [0, R] vanishing at R, with cached sup |g'|.
#[derive(Clone)]
pub struct RadialProfile(Arc<Inner>);

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("name", &self.0.name)
            .field("radius", &self.0.radius)
            .finish()
    }
}

pub(crate) fn poly_eval(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * r + a)
}

pub(crate) fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &a)| i as f64 * a)
        .collect()
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `int_a^b p(r) dr` for a polynomial in ascending powers.
pub(crate) fn poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
    let anti: Vec<f64> = std::iter::once(0.0)
        .chain(c.iter().enumerate().map(|(i, &v)| v / (i + 1) as f64))
        .collect();
    poly_eval(&anti, b) - poly_eval(&anti, a)
}

fn poly_pow(c: &[f64], k: u32) -> Vec<f64> {
    (0..k).fold(vec![1.0], |acc, _| poly_mul(&acc, c))
}

fn monomial(power: usize) -> Vec<f64> {
    let mut m = vec![0.0; power + 1];
    m[power] = 1.0;
    m
}

const SUP_SAMPLES: usize = 20_000;

impl RadialProfile {
    fn build(name: &str, radius: f64, shape: Shape) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidProfile(format!("radius must be positive, got {radius}")));
        }
        let mut profile = Self(Arc::new(Inner {
            name: name.to_string(),
            radius,
            shape,
            sup_gprime: 0.0,
        }));
        let scale = (0..=64)
            .map(|i| profile.g(radius * i as f64 / 64.0).abs())
            .fold(1.0, f64::max);
        let end = profile.g_raw(radius);
        if end.abs() > 1e-12 * scale {
            return Err(Error::InvalidProfile(format!("g(R) = {end:e}, expected 0")));
        }
        let mut sup = 0.0f64;
        for i in 0..=SUP_SAMPLES {
            sup = sup.max(profile.gprime(radius * i as f64 / SUP_SAMPLES as f64).abs());
        }
        if let Shape::Piecewise { breaks, .. } = &profile.0.shape {
            for &b in breaks {
                sup = sup.max(profile.gprime(b).abs());
            }
        }
        Arc::get_mut(&mut profile.0).unwrap().sup_gprime = sup;
        Ok(profile)
    }

    /// Single polynomial `sum c_i r^i` on [0, R].
    pub fn polynomial(name: &str, coeffs: &[f64], radius: f64) -> Result<Self> {
        Self::piecewise(name, &[0.0, radius], &[coeffs.to_vec()])
    }

    /// Piecewise polynomial; `breaks` runs from 0 to R and pieces must join in a C^1 way.
    pub fn piecewise(name: &str, breaks: &[f64], pieces: &[Vec<f64>]) -> Result<Self> {
        if breaks.len() != pieces.len() + 1 || pieces.is_empty() {
            return Err(Error::InvalidProfile(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                pieces.len()
            )));
        }
        if breaks[0] != 0.0 || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "breakpoints must start at 0 and increase strictly".into(),
            ));
        }
        for (i, w) in pieces.windows(2).enumerate() {
            let b = breaks[i + 1];
            let (l, r) = (&w[0], &w[1]);
            let scale = 1.0 + poly_eval(l, b).abs();
            if (poly_eval(l, b) - poly_eval(r, b)).abs() > 1e-10 * scale {
                return Err(Error::InvalidProfile(format!("discontinuity at r = {b}")));
            }
            let (dl, dr) = (poly_derivative(l), poly_derivative(r));
            let dscale = 1.0 + poly_eval(&dl, b).abs();
            if (poly_eval(&dl, b) - poly_eval(&dr, b)).abs() > 1e-10 * dscale {
                return Err(Error::InvalidProfile(format!("derivative jump at r = {b}")));
            }
        }
        let last = pieces.last().unwrap();
        let end = *breaks.last().unwrap();
        let size = 1.0 + last.iter().map(|c| c.abs()).sum::<f64>();
        if poly_eval(last, end).abs() > 1e-10 * size {
            return Err(Error::InvalidProfile(format!("profile does not vanish at r = {end}")));
        }
        Self::build(
            name,
            *breaks.last().unwrap(),
            Shape::Piecewise {
                breaks: breaks.to_vec(),
                pieces: pieces.to_vec(),
            },
        )
    }

    /// Profile from closures. The derivative is checked against central differences.
    pub fn custom(name: &str, radius: f64, g: ProfileFn, gprime: ProfileFn) -> Result<Self> {
        let h = 1e-6 * radius;
        for i in 1..50 {
            let r = radius * i as f64 / 50.0;
            let fd = (g(r + h) - g(r - h)) / (2.0 * h);
            let d = gprime(r);
            if (fd - d).abs() > 1e-5 * (1.0 + d.abs()) {
                return Err(Error::InvalidProfile(format!(
                    "g'({r}) = {d} but finite differences give {fd}"
                )));
            }
        }
        Self::build(name, radius, Shape::Custom { g, gprime })
    }

    /// g(r) = r (1 - r) on [0, 1]; positive inside.
    pub fn g_plus() -> Self {
        Self::polynomial("g_plus", &[0.0, 1.0, -1.0], 1.0).expect("valid built-in")
    }

    /// g(r) = r (1 - r) (a - r) on [0, 1] with `a` chosen so that
    /// `int_0^1 g^3 r^{d-1} dr = 0` (bisection to 1e-12).
    pub fn g_balanced(dim: usize) -> Self {
        let a = balanced_root(dim);
        Self::polynomial("g_balanced", &balanced_coeffs(a), 1.0).expect("valid built-in")
    }

    /// Standard mollifier profile `exp(-1 / (1 - r^2))` on [0, 1].
    pub fn mollifier() -> Self {
        Self::build("mollifier", 1.0, Shape::Mollifier).expect("valid built-in")
    }

    /// The profile `r -> g(r R / radius)` on `[0, radius]`. Only piecewise
    /// polynomials can be rescaled.
    pub fn scaled_to(&self, radius: f64) -> Result<Self> {
        let Some((breaks, pieces)) = self.pieces() else {
            return Err(Error::InvalidProfile(format!("profile '{}' cannot be rescaled", self.name())));
        };
        let s = self.radius() / radius;
        let pieces: Vec<Vec<f64>> = pieces
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, c)| c * s.powi(i as i32)).collect())
            .collect();
        let breaks: Vec<f64> = breaks.iter().map(|b| b / s).collect();
        Self::piecewise(self.name(), &breaks, &pieces)
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn radius(&self) -> f64 {
        self.0.radius
    }

    pub fn sup_gprime(&self) -> f64 {
        self.0.sup_gprime
    }

    /// Polynomial pieces, if the profile is piecewise polynomial.
    pub fn pieces(&self) -> Option<(&[f64], &[Vec<f64>])> {
        match &self.0.shape {
            Shape::Piecewise { breaks, pieces } => Some((breaks, pieces)),
            _ => None,
        }
    }

    fn piece_index(breaks: &[f64], r: f64) -> usize {
        (breaks.partition_point(|&b| b <= r).max(1) - 1).min(breaks.len() - 2)
    }

    fn g_raw(&self, r: f64) -> f64 {
        match &self.0.shape {
            Shape::Piecewise { breaks, pieces } => poly_eval(&pieces[Self::piece_index(breaks, r)], r),
            Shape::Mollifier => {
                let q = 1.0 - r * r;
                if q > 0.0 {
                    (-1.0 / q).exp()
                } else {
                    0.0
                }
            }
            Shape::Custom { g, .. } => g(r),
        }
    }

    /// g(r), zero for r >= R.
    pub fn g(&self, r: f64) -> f64 {
        if r >= self.0.radius {
            0.0
        } else {
            self.g_raw(r)
        }
    }

    /// g'(r), zero for r > R.
    pub fn gprime(&self, r: f64) -> f64 {
        if r > self.0.radius {
            return 0.0;
        }
        match &self.0.shape {
            Shape::Piecewise { breaks, pieces } => {
                poly_eval(&poly_derivative(&pieces[Self::piece_index(breaks, r)]), r)
            }
            Shape::Mollifier => {
                let q = 1.0 - r * r;
                if q > 0.0 {
                    -2.0 * r / (q * q) * (-1.0 / q).exp()
                } else {
                    0.0
                }
            }
            Shape::Custom { gprime, .. } => gprime(r),
        }
    }

    /// `int_0^R g(r)^k r^{d-1} dr`; exact for piecewise polynomials.
    pub fn moment(&self, k: u32, dim: usize) -> f64 {
        match &self.0.shape {
            Shape::Piecewise { breaks, pieces } => pieces
                .iter()
                .enumerate()
                .map(|(i, p)| poly_integral(&poly_mul(&poly_pow(p, k), &monomial(dim - 1)), breaks[i], breaks[i + 1]))
                .sum(),
            _ => self.simpson_moment(k, dim, false),
        }
    }

    /// `int_0^R |g(r)|^k r^{d-1} dr` by adaptive Simpson.
    pub fn abs_moment(&self, k: u32, dim: usize) -> f64 {
        if k % 2 == 0 {
            return self.moment(k, dim);
        }
        self.simpson_moment(k, dim, true)
    }

    fn simpson_moment(&self, k: u32, dim: usize, abs: bool) -> f64 {
        let f = |r: f64| {
            let v = self.g(r).powi(k as i32) * r.powi(dim as i32 - 1);
            if abs {
                v.abs()
            } else {
                v
            }
        };
        let breaks: Vec<f64> = match &self.0.shape {
            Shape::Piecewise { breaks, .. } => breaks.clone(),
            _ => vec![0.0, self.0.radius],
        };
        breaks
            .windows(2)
            .map(|w| adaptive_simpson(f, w[0], w[1], 1e-10, 1e-15))
            .sum()
    }
}

fn balanced_coeffs(a: f64) -> Vec<f64> {
    vec![0.0, a, -(1.0 + a), 1.0]
}

/// Root of `a -> int_0^1 (r (1 - r) (a - r))^3 r^{d-1} dr`, increasing on [0, 1]
/// from negative to positive.
fn balanced_root(dim: usize) -> f64 {
    let cubic = |a: f64| {
        let c = balanced_coeffs(a);
        poly_integral(&poly_mul(&poly_pow(&c, 3), &monomial(dim - 1)), 0.0, 1.0)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if cubic(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson_oracle(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn g_plus_moments_match_simpson_oracle() {
        let g = RadialProfile::g_plus();
        for k in 2..=4 {
            let oracle = simpson_oracle(|r| (r * (1.0 - r)).powi(k as i32) * r, 0.0, 1.0, 100_000);
            assert!((g.moment(k, 2) - oracle).abs() < 1e-14);
        }
        assert!((g.moment(3, 2) - 1.0 / 280.0).abs() < 1e-15);
        assert!((g.sup_gprime() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_profile_has_zero_cubic_moment() {
        for d in 2..=3 {
            let g = RadialProfile::g_balanced(d);
            assert!(g.moment(3, d).abs() < 1e-13, "d = {d}");
            assert!(g.moment(2, d) > 0.0);
            // Simpson cross-check of the exact integral.
            let oracle = simpson_oracle(|r| g.g(r).powi(3) * r.powi(d as i32 - 1), 0.0, 1.0, 100_000);
            assert!(oracle.abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for g in [RadialProfile::g_plus(), RadialProfile::g_balanced(2), RadialProfile::mollifier()] {
            for i in 1..40 {
                let r = i as f64 / 40.0;
                let h = 1e-6;
                let fd = (g.g(r + h) - g.g(r - h)) / (2.0 * h);
                assert!((fd - g.gprime(r)).abs() < 1e-6, "{} at {r}", g.name());
            }
        }
    }

    #[test]
    fn validation() {
        assert!(RadialProfile::polynomial("bad", &[1.0, -0.5], 1.0).is_err());
        // C^1 join of r(1-r) pieces split at 0.5.
        let p = vec![0.0, 1.0, -1.0];
        assert!(RadialProfile::piecewise("split", &[0.0, 0.5, 1.0], &[p.clone(), p.clone()]).is_ok());
        // 0.5 r meets r (1 - r) at 0.5 with slope 0.5 instead of 0.
        let kink = vec![0.0, 0.5];
        assert!(RadialProfile::piecewise("kink", &[0.0, 0.5, 1.0], &[kink, p]).is_err());
        assert!(RadialProfile::piecewise("open", &[0.0, 1.0], &[vec![1.0, 0.0, -0.5]]).is_err());
        let bad = RadialProfile::custom("c", 1.0, Arc::new(|r| 1.0 - r * r), Arc::new(|r| -r));
        assert!(bad.is_err());
    }

    #[test]
    fn rescaling_preserves_balance() {
        let g = RadialProfile::g_balanced(2).scaled_to(2.5).unwrap();
        assert_eq!(g.radius(), 2.5);
        assert!((g.g(1.0) - RadialProfile::g_balanced(2).g(0.4)).abs() < 1e-15);
        assert!(g.moment(3, 2).abs() < 1e-12);
        assert!(RadialProfile::mollifier().scaled_to(2.0).is_err());
    }

    #[test]
    fn abs_moment_of_sign_changing_profile() {
        let g = RadialProfile::g_balanced(2);
        let oracle = simpson_oracle(|r| g.g(r).abs().powi(3) * r, 0.0, 1.0, 200_000);
        assert!((g.abs_moment(3, 2) - oracle).abs() < 1e-9);
    }
}
