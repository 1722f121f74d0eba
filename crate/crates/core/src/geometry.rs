//! Small vector helpers and balls in R^d.

use smallvec::SmallVec;

/// A point or vector in R^d. Inline storage covers d <= 3 without allocation.
pub type Vector = SmallVec<[f64; 3]>;

pub fn zeros(dim: usize) -> Vector {
    SmallVec::from_elem(0.0, dim)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `a - b`
pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `p + t * v`
pub fn along(p: &[f64], v: &[f64], t: f64) -> Vector {
    p.iter().zip(v).map(|(x, y)| x + t * y).collect()
}

pub fn scaled(v: &[f64], s: f64) -> Vector {
    v.iter().map(|x| x * s).collect()
}

/// Closed ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vector,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Self {
        Self {
            center: center.iter().copied().collect(),
            radius,
        }
    }

    pub fn centered(dim: usize, radius: f64) -> Self {
        Self {
            center: zeros(dim),
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(x, &self.center) <= self.radius
    }

    /// Radius of the smallest origin-centred ball containing this one.
    pub fn outer_radius(&self) -> f64 {
        norm(&self.center) + self.radius
    }

    /// Parameter interval `[t0, t1]` on which the line `p + t * dir` (|dir| = 1)
    /// lies inside the ball, or `None` if the line misses it.
    pub fn chord(&self, p: &[f64], dir: &[f64]) -> Option<(f64, f64)> {
        let rel = sub(p, &self.center);
        let b = dot(&rel, dir);
        let c = dot(&rel, &rel) - self.radius * self.radius;
        let disc = b * b - c;
        if disc <= 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some((-b - root, -b + root))
    }

    /// Chord restricted to the ray parameters `t >= t_min`.
    pub fn ray_segment(&self, p: &[f64], dir: &[f64], t_min: f64) -> Option<(f64, f64)> {
        let (t0, t1) = self.chord(p, dir)?;
        let lo = t0.max(t_min);
        (t1 > lo).then_some((lo, t1))
    }
}
