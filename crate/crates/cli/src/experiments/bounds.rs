//! Empirical W1 against the classical, third-cumulant and O(1/k) bounds.

use super::{attach_kd, kernel, rate_curves, rate_table, w1_intervals, Check, ExperimentResult, RateRow};
use crate::config::Config;
use crate::error::CliError;

/// `w1 <= bound + n_se * se` for every bound present in the row.
pub(crate) fn domination_checks(rows: &[RateRow], n_se: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    for r in rows {
        let margin = n_se * r.w1_se;
        let tag = format!("{}_k{}", r.profile, r.k);
        checks.push(Check::at_most(format!("w1_le_classical_{tag}"), r.w1, r.bound_classical + margin));
        checks.push(Check::at_most(format!("w1_le_third_cumulant_{tag}"), r.w1, r.bound_third_cumulant + margin));
        if let Some(b) = r.bound_o1k {
            checks.push(Check::at_most(format!("w1_le_o1k_{tag}"), r.w1, b + margin));
        }
    }
    checks
}

pub fn run_bounds(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let mut ke = kernel(cfg, false)?;
    attach_kd(&mut ke, cfg);
    let rows = rate_table(cfg, &ke)?;
    Ok(ExperimentResult {
        checks: domination_checks(&rows, cfg.mc.n_se),
        summary: w1_intervals(&rows),
        curves: rate_curves(&rows),
        rows,
    })
}
