//! Monte Carlo check of the Edgeworth-type expansion for one family member.

use steinlab_core::malliavin::{edgeworth_residual, TestFunction};

use super::{attach_kd, family, kernel, Check, ExperimentResult, SummaryRow};
use crate::config::Config;
use crate::error::CliError;

pub fn run_edgeworth(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let ec = &cfg.edgeworth;
    let test_g = match ec.test_function.as_str() {
        "identity" => TestFunction::Identity,
        _ => TestFunction::Sine,
    };
    let mut ke = kernel(cfg, false)?;
    attach_kd(&mut ke, cfg);
    let fam = family(cfg, &ec.profile)?;
    let f = fam.member(ec.k)?;
    let ke_k = ke.rescaled(fam.carrier_radius(ec.k))?;
    let mc = cfg.mc_settings();
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for &n in &ec.orders {
        let rep = edgeworth_residual(&ke_k, &f, test_g, n, &mc)?;
        log::info!(
            "order {n}: E[δ g(δ)] = {:.6}, terms {:?}, residual {:.3e} ± {:.1e}, bound {:.3e}",
            rep.lhs,
            rep.terms,
            rep.residual,
            rep.residual_se,
            rep.remainder_bound
        );
        checks.push(Check::at_most(
            format!("residual_order{n}_{}_k{}", ec.profile, ec.k),
            rep.residual.abs(),
            rep.remainder_bound + cfg.mc.n_se * rep.residual_se,
        ));
        summary.push(SummaryRow {
            quantity: format!("residual_order{n}"),
            profile: ec.profile.clone(),
            k: Some(ec.k),
            estimate: rep.residual,
            std_error: rep.residual_se,
            ci_low: rep.residual - 1.96 * rep.residual_se,
            ci_high: rep.residual + 1.96 * rep.residual_se,
        });
    }
    Ok(ExperimentResult {
        checks,
        summary,
        ..Default::default()
    })
}
