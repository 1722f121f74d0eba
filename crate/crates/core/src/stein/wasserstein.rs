//! Exact W1 distance between an empirical distribution and N(0, 1).

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::integrals::{sample_integrals, ScalarField};
use crate::montecarlo::{McSettings, SampleStats};
use crate::sampling::{derive_seed, rng_from_seed};

pub const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x5EED_B007;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WassersteinEstimate {
    pub value: f64,
    /// Bootstrap standard error.
    pub std_error: f64,
    pub n_samples: usize,
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Sorted sample with `Φ` and the antiderivative `Ψ(x) = x Φ(x) + φ(x)` cached.
struct Prepared {
    x: Vec<f64>,
    cdf: Vec<f64>,
    psi: Vec<f64>,
}

impl Prepared {
    fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sample contains non-finite values".into()));
        }
        let mut x = samples.to_vec();
        x.sort_by(f64::total_cmp);
        let n = std_normal();
        let cdf: Vec<f64> = x.iter().map(|&v| n.cdf(v)).collect();
        let psi: Vec<f64> = x.iter().zip(&cdf).map(|(&v, &c)| v * c + n.pdf(v)).collect();
        Ok(Self { x, cdf, psi })
    }

    /// `int |F - Φ|` where `F` jumps by `weights[i]` at `x[i]` (weights sum to 1).
    fn distance(&self, weights: impl Iterator<Item = f64>) -> f64 {
        let normal = std_normal();
        let last = self.x.len() - 1;
        // Left tail: F = 0 below the smallest point.
        let mut total = self.psi[0];
        let mut p = 0.0;
        for (i, w) in weights.enumerate().take(last) {
            p += w;
            let (a, b) = (self.x[i], self.x[i + 1]);
            if b <= a {
                continue;
            }
            let (ca, cb) = (self.cdf[i], self.cdf[i + 1]);
            let (pa, pb) = (self.psi[i], self.psi[i + 1]);
            total += if p <= ca {
                pb - pa - p * (b - a)
            } else if p >= cb {
                p * (b - a) - (pb - pa)
            } else {
                let q = normal.inverse_cdf(p).clamp(a, b);
                let pq = q * p + normal.pdf(q);
                (p * (q - a) - (pq - pa)) + (pb - pq - p * (b - q))
            };
        }
        // Right tail: F = 1 above the largest point.
        let xn = self.x[last];
        total + (-xn * normal.cdf(-xn) + normal.pdf(xn))
    }
}

/// `W1(F_n, N(0, 1))` without a standard error.
pub fn w1_to_gaussian(samples: &[f64]) -> Result<f64> {
    let prep = Prepared::new(samples)?;
    let w = 1.0 / samples.len() as f64;
    Ok(prep.distance(std::iter::repeat(w)))
}

/// W1 distance with a bootstrap standard error (200 resamples, fixed seed).
pub fn wasserstein_to_gaussian(samples: &[f64]) -> Result<WassersteinEstimate> {
    wasserstein_with_bootstrap(samples, BOOTSTRAP_RESAMPLES)
}

pub fn wasserstein_with_bootstrap(samples: &[f64], resamples: usize) -> Result<WassersteinEstimate> {
    let prep = Prepared::new(samples)?;
    let n = samples.len();
    let w = 1.0 / n as f64;
    let value = prep.distance(std::iter::repeat(w));
    let std_error = if resamples < 2 || n < 2 {
        0.0
    } else {
        // Resampling the sorted sample is resampling the original one; only
        // the multiplicities matter.
        let boot: Vec<f64> = (0..resamples)
            .into_par_iter()
            .map(|b| {
                let mut rng = rng_from_seed(derive_seed(BOOTSTRAP_SEED ^ n as u64, b as u64));
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                prep.distance(counts.iter().map(|&c| c as f64 * w))
            })
            .collect();
        SampleStats::from_slice(&boot).variance.sqrt()
    };
    Ok(WassersteinEstimate {
        value,
        std_error,
        n_samples: n,
    })
}

/// W1 distance between the law of `δ(f)` (Monte Carlo) and N(0, 1).
pub fn mc_distance(f: &ScalarField, mc: &McSettings) -> Result<WassersteinEstimate> {
    wasserstein_to_gaussian(&sample_integrals(f, mc)?)
}
