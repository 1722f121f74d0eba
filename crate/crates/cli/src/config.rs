//! Experiment configuration: a TOML file with documented keys. Unknown keys
//! are rejected so that every run is fully described by its file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use steinlab_core::integrals::RadialProfile;
use steinlab_core::kernel::QuadraturePolicy;
use steinlab_core::montecarlo::McSettings;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Ambient dimension d (quadrature-based checks support 2 and 3).
    pub dim: usize,
    /// Data radius R.
    pub radius: f64,
    /// Profile names: `g_plus`, `g_balanced`, or keys of `[profile.*]`.
    pub profiles: Vec<String>,
    /// Family indices k, strictly increasing.
    pub k_grid: Vec<u64>,
    pub kernel: KernelConfig,
    pub mc: McConfig,
    pub output: OutputConfig,
    /// Piecewise-polynomial profiles on `[0, breaks[-1]]`.
    #[serde(rename = "profile")]
    pub custom_profiles: BTreeMap<String, PiecewiseProfile>,
    pub verify_kernel: VerifyKernelConfig,
    pub identities: IdentitiesConfig,
    pub rates: RatesConfig,
    pub edgeworth: EdgeworthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    /// Starting Gauss-Legendre size for ray integrals.
    pub nodes: usize,
    /// Relative tolerance for node doubling.
    pub tol: f64,
    pub max_nodes: usize,
    /// Excision radius as a fraction of R.
    pub epsilon_excision: f64,
    /// Angular nodes for directional integrals.
    pub angular_nodes: usize,
    /// Mollifier centre; defaults to `(1.5 R, 0, ...)`.
    pub eta_center: Option<Vec<f64>>,
    /// Mollifier radius; defaults to `R / 4`.
    pub eta_radius: Option<f64>,
    /// Random pairs for the K_d estimate.
    pub kd_pairs: usize,
    pub kd_seed: u64,
    /// Use this K_d instead of estimating it.
    pub kd_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub replications: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    /// Monte Carlo acceptance margin in standard errors.
    pub n_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseProfile {
    pub breaks: Vec<f64>,
    /// Coefficients of each piece in ascending powers of r.
    pub pieces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyKernelConfig {
    pub probes: usize,
    pub compat_pairs: usize,
    pub bound_pairs: usize,
    /// Tolerance of the divergence identity.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    /// Centre of the test bump h; defaults to the origin.
    pub h_center: Option<Vec<f64>>,
    /// Radius of h as a fraction of R.
    pub h_radius: f64,
    pub realizations: usize,
    pub probes: usize,
    /// Relative tolerance of the deterministic identities and absolute
    /// tolerance of the commutation relation.
    pub tolerance: f64,
    /// Profile of the normalized member used for the isometry and cumulant checks.
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub separation_k: u64,
    /// `[smaller, larger]`: the first profile must have the smaller W1.
    pub separation_pair: Vec<String>,
    pub separation_replications: usize,
    /// Bound slopes are fitted over `k = 1, 2, 4, ...` up to this value.
    pub slope_k_max: u64,
    pub slope_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgeworthConfig {
    pub profile: String,
    pub k: u64,
    pub orders: Vec<usize>,
    /// `sin` or `identity`.
    pub test_function: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dim: 2,
            radius: 1.0,
            profiles: vec!["g_plus".into(), "g_balanced".into()],
            k_grid: vec![1, 4, 16, 64],
            kernel: KernelConfig::default(),
            mc: McConfig::default(),
            output: OutputConfig::default(),
            custom_profiles: BTreeMap::new(),
            verify_kernel: VerifyKernelConfig::default(),
            identities: IdentitiesConfig::default(),
            rates: RatesConfig::default(),
            edgeworth: EdgeworthConfig::default(),
        }
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        let p = QuadraturePolicy::default();
        Self {
            nodes: p.nodes,
            tol: p.tol,
            max_nodes: p.max_nodes,
            epsilon_excision: p.epsilon_rel,
            angular_nodes: p.angular_nodes,
            eta_center: None,
            eta_radius: None,
            kd_pairs: 10_000,
            kd_seed: 42,
            kd_override: None,
        }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            replications: 100_000,
            master_seed: 20_240_601,
            workers: 0,
            n_se: 4.0,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "steinlab-out".into(),
        }
    }
}

impl Default for VerifyKernelConfig {
    fn default() -> Self {
        Self {
            probes: 20,
            compat_pairs: 10_000,
            bound_pairs: 10_000,
            tolerance: 1e-2,
        }
    }
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            h_center: None,
            h_radius: 0.9,
            realizations: 10,
            probes: 10,
            tolerance: 1e-2,
            profile: "g_plus".into(),
        }
    }
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            separation_k: 64,
            separation_pair: vec!["g_balanced".into(), "g_plus".into()],
            separation_replications: 1_000_000,
            slope_k_max: 256,
            slope_tolerance: 1e-3,
        }
    }
}

impl Default for EdgeworthConfig {
    fn default() -> Self {
        Self {
            profile: "g_balanced".into(),
            k: 16,
            orders: vec![1, 2],
            test_function: "sin".into(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is serializable")
    }

    /// Checks that hold for every experiment.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim < 2 {
            return Err(invalid(format!("dim must be at least 2, got {}", self.dim)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {}", self.radius)));
        }
        if self.k_grid.is_empty() || self.k_grid[0] == 0 || self.k_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("k_grid must be nonempty, start at k >= 1 and increase strictly"));
        }
        if self.profiles.is_empty() {
            return Err(invalid("at least one profile is required"));
        }
        for name in self
            .profiles
            .iter()
            .chain(&self.rates.separation_pair)
            .chain([&self.edgeworth.profile, &self.identities.profile])
        {
            self.profile(name)?;
        }
        if self.rates.slope_k_max < 4 || self.rates.separation_k == 0 {
            return Err(invalid("rates.slope_k_max must be at least 4 and rates.separation_k at least 1"));
        }
        if self.rates.separation_pair.len() != 2 {
            return Err(invalid("rates.separation_pair must name two profiles"));
        }
        let k = &self.kernel;
        if k.nodes == 0 || k.max_nodes < k.nodes || !(k.tol > 0.0) || k.angular_nodes < 4 {
            return Err(invalid("kernel quadrature settings are out of range"));
        }
        if !(k.epsilon_excision >= 0.0 && k.epsilon_excision < 1.0) {
            return Err(invalid("kernel.epsilon_excision must lie in [0, 1)"));
        }
        if let Some(c) = &k.eta_center {
            if c.len() != self.dim {
                return Err(invalid("kernel.eta_center must have dim coordinates"));
            }
        }
        if let Some(r) = k.eta_radius {
            if !(r > 0.0) {
                return Err(invalid("kernel.eta_radius must be positive"));
            }
        }
        if let Some(c) = &self.identities.h_center {
            if c.len() != self.dim {
                return Err(invalid("identities.h_center must have dim coordinates"));
            }
        }
        if !(self.identities.h_radius > 0.0) {
            return Err(invalid("identities.h_radius must be positive"));
        }
        if self.mc.replications < 2 || !(self.mc.n_se > 0.0) {
            return Err(invalid("mc.replications must be at least 2 and mc.n_se positive"));
        }
        if !matches!(self.edgeworth.test_function.as_str(), "sin" | "identity") {
            return Err(invalid(format!(
                "edgeworth.test_function must be 'sin' or 'identity', got '{}'",
                self.edgeworth.test_function
            )));
        }
        if self.edgeworth.orders.iter().any(|&n| n > 2) || self.edgeworth.k == 0 {
            return Err(invalid("edgeworth.orders must lie in {0, 1, 2} and edgeworth.k >= 1"));
        }
        Ok(())
    }

    /// Extra checks for experiments that estimate convergence rates.
    pub fn validate_rates(&self) -> Result<(), CliError> {
        if self.mc.replications < 1000 || self.rates.separation_replications < 1000 {
            return Err(invalid("rate experiments need at least 1000 replications"));
        }
        Ok(())
    }

    /// Dimension check for quadrature-based experiments.
    pub fn validate_quadrature_dim(&self) -> Result<(), CliError> {
        if !matches!(self.dim, 2 | 3) {
            return Err(invalid(format!(
                "this experiment uses angular quadrature, available for d = 2 and 3 only (got {})",
                self.dim
            )));
        }
        Ok(())
    }

    /// Resolves a profile name on `[0, R]`.
    pub fn profile(&self, name: &str) -> Result<RadialProfile, CliError> {
        let base = match name {
            "g_plus" => RadialProfile::g_plus(),
            "g_balanced" => RadialProfile::g_balanced(self.dim),
            other => {
                let p = self
                    .custom_profiles
                    .get(other)
                    .ok_or_else(|| invalid(format!("unknown profile '{other}'")))?;
                RadialProfile::piecewise(other, &p.breaks, &p.pieces).map_err(|e| invalid(e.to_string()))?
            }
        };
        base.scaled_to(self.radius).map_err(|e| invalid(e.to_string()))
    }

    pub fn policy(&self) -> QuadraturePolicy {
        QuadraturePolicy {
            nodes: self.kernel.nodes,
            tol: self.kernel.tol,
            max_nodes: self.kernel.max_nodes,
            epsilon_rel: self.kernel.epsilon_excision,
            angular_nodes: self.kernel.angular_nodes,
            ..QuadraturePolicy::default()
        }
    }

    pub fn mc_settings(&self) -> McSettings {
        McSettings::new(self.mc.replications, self.mc.master_seed).with_workers(self.mc.workers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn round_trip() {
        let cfg = Config::default();
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_toml("dimm = 2").is_err());
        assert!(Config::from_toml("[kernel]\nnode = 3").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::from_toml("radius = 0.0").is_err());
        assert!(Config::from_toml("radius = -1.0").is_err());
        assert!(Config::from_toml("k_grid = [1, 4, 4]").is_err());
        assert!(Config::from_toml("profiles = [\"nope\"]").is_err());
        let small = Config::from_toml("[mc]\nreplications = 500").unwrap();
        assert!(small.validate_rates().is_err());
    }

    #[test]
    fn custom_profiles_resolve() {
        let text = "profiles = [\"bell\"]\n[profile.bell]\nbreaks = [0.0, 1.0]\npieces = [[1.0, 0.0, -2.0, 0.0, 1.0]]\n";
        let cfg = Config::from_toml(text).unwrap();
        let p = cfg.profile("bell").unwrap();
        assert!((p.g(0.5) - 0.5625).abs() < 1e-15);
        let bad = "profiles = [\"bad\"]\n[profile.bad]\nbreaks = [0.0, 1.0]\npieces = [[1.0]]\n";
        assert!(Config::from_toml(bad).is_err());
    }
}
