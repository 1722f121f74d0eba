//! Simulation of a Poisson random measure with Lebesgue intensity on a ball.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Volume of `B(0, radius)` in R^dim.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    let d = dim as f64;
    PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0) * radius.powf(d)
}

/// Surface measure of the unit sphere S^{d-1}, i.e. `d * v_d`.
pub fn sphere_area(dim: usize) -> f64 {
    dim as f64 * ball_volume(dim, 1.0)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master`. Both arguments pass through a
/// bijective 64-bit mixer, so distinct indices under one master never collide.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub dim: usize,
    pub radius: f64,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(dim: usize, radius: f64, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension {
                dim,
                reason: "the Poisson sampler needs d >= 2",
            });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { dim, radius, seed })
    }
}

/// Finite point set in the open ball `B(0, radius)`, stored as flat coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    radius: f64,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn empty(dim: usize, radius: f64) -> Self {
        Self {
            dim,
            radius,
            coords: Vec::new(),
        }
    }

    /// Builds a configuration from explicit points, rejecting points outside the ball.
    pub fn from_points(dim: usize, radius: f64, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "point of dimension {} in a {dim}-dimensional configuration",
                    p.len()
                )));
            }
            if crate::geometry::norm(p) >= radius {
                return Err(Error::InvalidArgument(format!("point {p:?} lies outside B({radius})")));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, radius, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Writes a uniform point of `B(0, radius)` into `out`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64, out: &mut [f64]) {
    let dim = out.len();
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            n2 += *v * *v;
        }
        if n2 > 0.0 {
            let r = radius * rng.random::<f64>().powf(1.0 / dim as f64) / n2.sqrt();
            out.iter_mut().for_each(|v| *v *= r);
            // U = 1 would put the point on the sphere; the open ball excludes it.
            if crate::geometry::norm(out) < radius {
                return;
            }
        }
    }
}

/// Draws a configuration from an existing generator.
pub fn sample_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Configuration {
    let mean = ball_volume(dim, radius);
    let n = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
    let mut coords = vec![0.0; n * dim];
    for chunk in coords.chunks_exact_mut(dim) {
        uniform_in_ball(rng, radius, chunk);
    }
    Configuration { dim, radius, coords }
}

pub fn sample_configuration(spec: &SamplerSpec) -> Configuration {
    let mut rng = rng_from_seed(spec.seed);
    sample_with(&mut rng, spec.dim, spec.radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-13);
        assert!((ball_volume(3, 1.0) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((ball_volume(2, 2.0) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        let a: HashSet<u64> = (0..100_000).map(|i| derive_seed(1, i)).collect();
        let b: HashSet<u64> = (0..100_000).map(|i| derive_seed(2, i)).collect();
        assert_eq!(a.len(), 100_000);
        assert_eq!(a.intersection(&b).count(), 0);
    }

    #[test]
    fn same_seed_same_configuration() {
        let spec = SamplerSpec::new(2, 1.0, 99).unwrap();
        assert_eq!(sample_configuration(&spec), sample_configuration(&spec));
    }

    #[test]
    fn count_moments_and_uniformity() {
        let reps = 100_000u64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut inner = 0usize;
        let mut total = 0usize;
        for i in 0..reps {
            let cfg = sample_configuration(&SamplerSpec::new(2, 1.0, derive_seed(5, i)).unwrap());
            let n = cfg.len() as f64;
            sum += n;
            sum2 += n * n;
            total += cfg.len();
            inner += cfg.points().filter(|p| crate::geometry::norm(p) <= 0.5).count();
            assert!(cfg.points().all(|p| crate::geometry::norm(p) < 1.0));
        }
        let mean = sum / reps as f64;
        let var = sum2 / reps as f64 - mean * mean;
        assert!((mean - PI).abs() < 4.0 * (PI / reps as f64).sqrt());
        assert!((var - PI).abs() < 0.05 * PI);
        let frac = inner as f64 / total as f64;
        assert!((frac - 0.25).abs() < 4.0 * (0.25 * 0.75 / total as f64).sqrt());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SamplerSpec::new(1, 1.0, 0).is_err());
        assert!(SamplerSpec::new(2, 0.0, 0).is_err());
        assert!(Configuration::from_points(2, 1.0, &[vec![1.0, 0.0]]).is_err());
    }
}
