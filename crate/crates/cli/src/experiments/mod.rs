//! Named experiment pipelines. Each returns an [`ExperimentResult`] whose
//! checks decide the exit status.

mod bounds;
mod edgeworth;
mod identities;
mod rates;
mod verify_kernel;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use steinlab_core::geometry::{self, Vector};
use steinlab_core::integrals::{build_radial_family, RadialFieldFamily};
use steinlab_core::kernel::{BumpFunction, KernelEvaluator};
use steinlab_core::montecarlo::McSettings;
use steinlab_core::sampling::{derive_seed, rng_from_seed, uniform_in_ball};
use steinlab_core::stein::{mc_distance, BoundReport};

use crate::config::Config;
use crate::error::CliError;

pub use bounds::run_bounds;
pub use edgeworth::run_edgeworth;
pub use identities::run_identities;
pub use rates::run_rates;
pub use verify_kernel::run_verify_kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    VerifyKernel,
    Identities,
    Rates,
    Bounds,
    Edgeworth,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::VerifyKernel,
        Experiment::Identities,
        Experiment::Rates,
        Experiment::Bounds,
        Experiment::Edgeworth,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::VerifyKernel => "verify-kernel",
            Experiment::Identities => "identities",
            Experiment::Rates => "rates",
            Experiment::Bounds => "bounds",
            Experiment::Edgeworth => "edgeworth",
        }
    }

    /// Prefix of the output files.
    pub fn file_stem(&self) -> &'static str {
        match self {
            Experiment::VerifyKernel => "verify_kernel",
            other => other.name(),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{s}'")))
    }
}

/// One pass/fail line: `value` is compared against `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// True for lower-bound checks (`value >= threshold`).
    #[serde(skip)]
    pub lower: bool,
}

impl Check {
    /// How close the check is to failing: 1 at the threshold, above 1 when failing.
    pub fn severity(&self) -> f64 {
        if self.threshold == 0.0 {
            self.value
        } else if self.lower {
            self.threshold / self.value
        } else {
            self.value / self.threshold
        }
    }

    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            check: name.into(),
            value,
            threshold,
            pass: value <= threshold,
            lower: false,
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            check: name.into(),
            value,
            threshold,
            pass: value >= threshold,
            lower: true,
        }
    }
}

/// One `(profile, k)` row of the rate and bound tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub profile: String,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub k: u64,
    pub n_mc: usize,
    pub seed: u64,
    pub w1: f64,
    pub w1_se: f64,
    pub bound_classical: f64,
    pub bound_third_cumulant: f64,
    /// Empty for profiles that are not cubic-balanced.
    pub bound_o1k: Option<f64>,
    pub kd_empirical: f64,
}

/// Fitted slope or a confidence interval for one curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub profile: String,
    pub k: Option<u64>,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub checks: Vec<Check>,
    pub rows: Vec<RateRow>,
    pub summary: Vec<SummaryRow>,
    /// `(file name, points)` for two-column plot data.
    pub curves: Vec<(String, Vec<(f64, f64)>)>,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }
}

/// Runs one experiment. The seed in `cfg.mc.master_seed` is used as given.
pub fn run(experiment: Experiment, cfg: &Config) -> Result<ExperimentResult, CliError> {
    cfg.validate()?;
    match experiment {
        Experiment::VerifyKernel => run_verify_kernel(cfg),
        Experiment::Identities => run_identities(cfg),
        Experiment::Rates => run_rates(cfg),
        Experiment::Bounds => run_bounds(cfg),
        Experiment::Edgeworth => run_edgeworth(cfg),
    }
}

/// The configured mollifier, not yet checked against the placement rule.
pub(crate) fn configured_eta(cfg: &Config) -> Result<BumpFunction, CliError> {
    let r = cfg.radius;
    let standard = BumpFunction::standard(cfg.dim, r)?;
    let center: Vector = match &cfg.kernel.eta_center {
        Some(c) => Vector::from_slice(c),
        None => Vector::from_slice(standard.center()),
    };
    let rho = cfg.kernel.eta_radius.unwrap_or(standard.rho());
    Ok(BumpFunction::new(&center, rho)?)
}

/// Kernel evaluator from the configuration. A misplaced mollifier is a
/// configuration error unless `unchecked`.
pub(crate) fn kernel(cfg: &Config, unchecked: bool) -> Result<KernelEvaluator, CliError> {
    let eta = configured_eta(cfg)?;
    if unchecked {
        return Ok(KernelEvaluator::with_eta_unchecked(eta, cfg.radius, cfg.policy())?);
    }
    KernelEvaluator::with_eta(eta, cfg.radius, cfg.policy()).map_err(|e| match e {
        steinlab_core::Error::InvalidPlacement(msg) => CliError::Config(format!("mollifier placement: {msg}")),
        other => other.into(),
    })
}

/// Sets K_d from the override or estimates it.
pub(crate) fn attach_kd(ke: &mut KernelEvaluator, cfg: &Config) {
    match cfg.kernel.kd_override {
        Some(kd) => {
            log::info!("using K_d = {kd} from the configuration");
            ke.set_kd(kd);
        }
        None => {
            let kd = ke.estimate_kd(cfg.kernel.kd_pairs, cfg.kernel.kd_seed);
            log::info!("estimated K_d = {kd} from {} pairs", cfg.kernel.kd_pairs);
        }
    }
}

pub(crate) fn family(cfg: &Config, name: &str) -> Result<RadialFieldFamily, CliError> {
    Ok(build_radial_family(cfg.profile(name)?, cfg.dim)?)
}

/// `n` points uniform in `B(radius)`, deterministic in `seed`.
pub(crate) fn probe_points(dim: usize, radius: f64, n: usize, seed: u64) -> Vec<Vector> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let mut p = geometry::zeros(dim);
            uniform_in_ball(&mut rng, radius, &mut p);
            p
        })
        .collect()
}

/// Planar point scaled by `r` and padded with zeros to `dim`.
pub(crate) fn planar(p: &[f64; 2], dim: usize, r: f64) -> Vector {
    let mut v = geometry::zeros(dim);
    v[0] = p[0] * r;
    v[1] = p[1] * r;
    v
}

/// W1 of member `k` with seed `derive_seed(master, k)`, shared by all profiles.
pub(crate) fn rate_row(
    cfg: &Config,
    family: &RadialFieldFamily,
    ke: &KernelEvaluator,
    k: u64,
    replications: usize,
) -> Result<RateRow, CliError> {
    let seed = derive_seed(cfg.mc.master_seed, k);
    let mc = McSettings::new(replications, seed).with_workers(cfg.mc.workers);
    let f = family.member(k)?;
    let w = mc_distance(&f, &mc)?;
    let b = BoundReport::for_member(family, k, ke)?;
    log::info!(
        "{} k={k}: W1 = {:.5} ± {:.5}, classical {:.4}, third cumulant {:.4}",
        family.profile().name(),
        w.value,
        w.std_error,
        b.classical,
        b.third_cumulant
    );
    Ok(RateRow {
        profile: family.profile().name().to_string(),
        d: cfg.dim,
        r: cfg.radius,
        k,
        n_mc: w.n_samples,
        seed,
        w1: w.value,
        w1_se: w.std_error,
        bound_classical: b.classical,
        bound_third_cumulant: b.third_cumulant,
        bound_o1k: b.o1k,
        kd_empirical: b.kd_used,
    })
}

/// Rows for every configured profile and k.
pub(crate) fn rate_table(cfg: &Config, ke: &KernelEvaluator) -> Result<Vec<RateRow>, CliError> {
    let mut rows = Vec::new();
    for name in &cfg.profiles {
        let fam = family(cfg, name)?;
        for &k in &cfg.k_grid {
            rows.push(rate_row(cfg, &fam, ke, k, cfg.mc.replications)?);
        }
    }
    Ok(rows)
}

/// Plot curves `k -> w1` and `k -> bound` for each profile.
pub(crate) fn rate_curves(rows: &[RateRow]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut profiles: Vec<&str> = rows.iter().map(|r| r.profile.as_str()).collect();
    profiles.dedup();
    let mut curves = Vec::new();
    for p in profiles {
        let sel: Vec<&RateRow> = rows.iter().filter(|r| r.profile == p).collect();
        let curve = |f: &dyn Fn(&RateRow) -> Option<f64>| -> Vec<(f64, f64)> {
            sel.iter().filter_map(|r| f(r).map(|v| (r.k as f64, v))).collect()
        };
        curves.push((format!("{p}_w1.dat"), curve(&|r| Some(r.w1))));
        curves.push((format!("{p}_bound_classical.dat"), curve(&|r| Some(r.bound_classical))));
        curves.push((format!("{p}_bound_third_cumulant.dat"), curve(&|r| Some(r.bound_third_cumulant))));
        let o1k = curve(&|r| r.bound_o1k);
        if !o1k.is_empty() {
            curves.push((format!("{p}_bound_o1k.dat"), o1k));
        }
    }
    curves
}

/// 95% normal confidence interval for each row's W1.
pub(crate) fn w1_intervals(rows: &[RateRow]) -> Vec<SummaryRow> {
    rows.iter()
        .map(|r| SummaryRow {
            quantity: "w1".into(),
            profile: r.profile.clone(),
            k: Some(r.k),
            estimate: r.w1,
            std_error: r.w1_se,
            ci_low: r.w1 - 1.96 * r.w1_se,
            ci_high: r.w1 + 1.96 * r.w1_se,
        })
        .collect()
}
