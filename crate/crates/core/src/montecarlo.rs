//! Seeded, order-deterministic parallel replication.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{derive_seed, rng_from_seed};

/// Replications per chunk. Chunk boundaries are fixed, so merged statistics
/// do not depend on how the scheduler assigns work.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub replications: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl McSettings {
    pub fn new(replications: usize, master_seed: u64) -> Self {
        Self {
            replications,
            master_seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Runs `f(index, rng)` for every replication with an RNG seeded from
/// `derive_seed(master_seed, index)`. Output order is the replication order.
pub fn replicate<T, F>(mc: &McSettings, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync + Send,
{
    let run = || -> Result<Vec<T>> {
        let chunks: Vec<Result<Vec<T>>> = (0..mc.replications.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(mc.replications);
                (lo..hi)
                    .map(|i| {
                        let mut rng = rng_from_seed(derive_seed(mc.master_seed, i as u64));
                        f(i, &mut rng)
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(mc.replications);
        for chunk in chunks {
            out.extend(chunk?);
        }
        Ok(out)
    };
    if mc.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?
            .install(run)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::default();
    xs.into_iter().for_each(|x| s.add(x));
    s.value()
}

/// Mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl SampleStats {
    /// Sums are accumulated per fixed-size chunk and merged in chunk order.
    pub fn from_slice(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                variance: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = chunked_sum(xs, |x| x) / n as f64;
        let variance = if n > 1 {
            chunked_sum(xs, |x| (x - mean) * (x - mean)) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }
}

fn chunked_sum(xs: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = xs
        .par_chunks(CHUNK)
        .map(|c| compensated_sum(c.iter().map(|&x| f(x))))
        .collect();
    compensated_sum(partial)
}

/// Standard error of the sample variance, from the fourth central moment.
pub fn variance_std_error(xs: &[f64]) -> f64 {
    let st = SampleStats::from_slice(xs);
    let n = xs.len() as f64;
    let m4 = chunked_sum(xs, |x| (x - st.mean).powi(4)) / n;
    ((m4 - st.variance * st.variance * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}
