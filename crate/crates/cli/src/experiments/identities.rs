//! Isometry, duality, commutation, moment and cumulant identities.

use steinlab_core::geometry::{self, Vector};
use steinlab_core::integrals::{sample_integrals, ScalarField};
use steinlab_core::malliavin::{commutation_check, duality_check, fixtures, gamma_sequence, moment_identity_grid};
use steinlab_core::montecarlo::{variance_std_error, McSettings, SampleStats};
use steinlab_core::sampling::{derive_seed, sample_configuration, SamplerSpec};

use super::{family, kernel, planar, probe_points, Check, ExperimentResult};
use crate::config::Config;
use crate::error::CliError;

/// The bump `h` of the commutation check.
fn test_bump(cfg: &Config) -> Result<ScalarField, CliError> {
    let center: Vector = match &cfg.identities.h_center {
        Some(c) => Vector::from_slice(c),
        None => geometry::zeros(cfg.dim),
    };
    Ok(ScalarField::bump(&center, cfg.identities.h_radius * cfg.radius, 1.0)?)
}

/// `(h, f)` pairs for the moment identity.
fn moment_pairs(cfg: &Config) -> Result<Vec<(ScalarField, ScalarField)>, CliError> {
    let (d, r) = (cfg.dim, cfg.radius);
    Ok(vec![
        (
            ScalarField::bump(&planar(&[0.0, 0.0], d, r), 0.9 * r, 1.0)?,
            ScalarField::bump(&planar(&[-0.2, 0.1], d, r), 0.6 * r, 1.0)?,
        ),
        (
            ScalarField::bump(&planar(&[0.1, -0.1], d, r), 0.8 * r, 1.5)?,
            ScalarField::bump(&planar(&[0.3, 0.2], d, r), 0.4 * r, 2.0)?,
        ),
    ])
}

pub fn run_identities(cfg: &Config) -> Result<ExperimentResult, CliError> {
    cfg.validate_quadrature_dim()?;
    let id = &cfg.identities;
    let seed = cfg.mc.master_seed;
    let n_se = cfg.mc.n_se;
    let ke = kernel(cfg, false)?;
    let mut checks = Vec::new();

    let fam = family(cfg, &id.profile)?;
    let member = fam.member(1)?;
    let samples = sample_integrals(&member, &cfg.mc_settings())?;
    let stats = SampleStats::from_slice(&samples);
    let var_se = variance_std_error(&samples);
    checks.push(Check::at_most("isometry_mean_abs", stats.mean.abs(), n_se * stats.std_error));
    checks.push(Check::at_most("isometry_variance_gap", (stats.variance - 1.0).abs(), n_se * var_se));

    for (i, pair) in fixtures::duality_pairs(&ke)?.iter().enumerate() {
        let mc = McSettings::new(cfg.mc.replications, derive_seed(seed, 100 + i as u64)).with_workers(cfg.mc.workers);
        let rep = duality_check(pair, &mc)?;
        log::info!(
            "duality {}: E<u,DF> = {:.6}, E[F δ(u)] = {:.6}, paired SE {:.2e}",
            pair.name,
            rep.lhs.mean,
            rep.rhs.mean,
            rep.difference.std_error
        );
        checks.push(Check::at_most(format!("duality_{}_gap", pair.name), rep.gap(), n_se * rep.combined_se));
    }

    let h = test_bump(cfg)?;
    let mut worst = 0.0f64;
    for i in 0..id.realizations {
        let spec = SamplerSpec::new(cfg.dim, cfg.radius, derive_seed(seed, 200 + i as u64))?;
        let conf = sample_configuration(&spec);
        for y in probe_points(cfg.dim, cfg.radius, id.probes, derive_seed(seed, 300 + i as u64)) {
            worst = worst.max(commutation_check(&ke, &h, &conf, &y)?.error);
        }
    }
    checks.push(Check::at_most("commutation_max_error", worst, id.tolerance));

    for (p, (h, f)) in moment_pairs(cfg)?.iter().enumerate() {
        for c in moment_identity_grid(&ke, h, f, &[1, 2], &[1, 2, 3])? {
            checks.push(Check::at_most(
                format!("moment_pair{}_n{}_m{}_relative_error", p + 1, c.n, c.m),
                c.relative_error,
                id.tolerance,
            ));
        }
    }

    let gamma_fields = [(id.profile.as_str(), member), ("bump", moment_pairs(cfg)?.remove(0).0)];
    for (label, field) in &gamma_fields {
        for c in gamma_sequence(&ke, field, &[2, 3, 4])? {
            checks.push(Check::at_most(
                format!("gamma_{label}_k{}_relative_error", c.order),
                c.relative_error,
                id.tolerance,
            ));
        }
    }

    Ok(ExperimentResult {
        checks,
        ..Default::default()
    })
}
