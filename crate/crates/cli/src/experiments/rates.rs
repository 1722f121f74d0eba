//! Convergence rates: log-log slopes of the bounds in k and the separation
//! of the empirical W1 between two profiles.

use steinlab_core::stein::{classical_bound, loglog_slope, o1k_bound, SlopeFit};

use super::{attach_kd, family, kernel, rate_curves, rate_row, rate_table, w1_intervals, Check, ExperimentResult, SummaryRow};
use crate::config::Config;
use crate::error::CliError;

fn slope_row(quantity: &str, profile: &str, fit: &SlopeFit) -> SummaryRow {
    SummaryRow {
        quantity: quantity.into(),
        profile: profile.into(),
        k: None,
        estimate: fit.slope,
        std_error: fit.slope_se,
        ci_low: fit.ci_low,
        ci_high: fit.ci_high,
    }
}

/// Powers of two from 1 up to `k_max`.
fn dyadic_grid(k_max: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |k| k.checked_mul(2)).take_while(|&k| k <= k_max).collect()
}

pub fn run_rates(cfg: &Config) -> Result<ExperimentResult, CliError> {
    cfg.validate_rates()?;
    let rc = &cfg.rates;
    let mut ke = kernel(cfg, false)?;
    attach_kd(&mut ke, cfg);
    let mut checks = Vec::new();
    let mut summary = Vec::new();

    let ks = dyadic_grid(rc.slope_k_max);
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    for name in &cfg.profiles {
        let fam = family(cfg, name)?;
        let classical: Vec<f64> = ks
            .iter()
            .map(|&k| classical_bound(&fam.member(k)?))
            .collect::<Result<_, _>>()?;
        let fit = loglog_slope(&xs, &classical)?;
        checks.push(Check::at_most(
            format!("classical_slope_{name}_abs_deviation"),
            (fit.slope + 0.5).abs(),
            rc.slope_tolerance,
        ));
        summary.push(slope_row("slope_bound_classical", name, &fit));
        if fam.is_balanced() {
            let o1k: Vec<f64> = ks.iter().map(|&k| o1k_bound(&fam, k, &ke).value).collect();
            let fit = loglog_slope(&xs, &o1k)?;
            checks.push(Check::at_most(
                format!("o1k_slope_{name}_abs_deviation"),
                (fit.slope + 1.0).abs(),
                rc.slope_tolerance,
            ));
            summary.push(slope_row("slope_bound_o1k", name, &fit));
        }
    }

    let rows = rate_table(cfg, &ke)?;
    let mut profiles: Vec<&str> = rows.iter().map(|r| r.profile.as_str()).collect();
    profiles.dedup();
    for p in profiles {
        let (kx, w): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.profile == p && r.w1 > 0.0)
            .map(|r| (r.k as f64, r.w1))
            .unzip();
        if kx.len() >= 3 {
            summary.push(slope_row("slope_w1", p, &loglog_slope(&kx, &w)?));
        }
    }
    summary.extend(w1_intervals(&rows));

    let (small, large) = (&rc.separation_pair[0], &rc.separation_pair[1]);
    let k = rc.separation_k;
    let a = rate_row(cfg, &family(cfg, small)?, &ke, k, rc.separation_replications)?;
    let b = rate_row(cfg, &family(cfg, large)?, &ke, k, rc.separation_replications)?;
    let combined = a.w1_se.hypot(b.w1_se);
    checks.push(Check::at_least(
        format!("separation_k{k}_{large}_minus_{small}_in_se"),
        (b.w1 - a.w1) / combined,
        cfg.mc.n_se,
    ));
    for r in [&a, &b] {
        summary.push(SummaryRow {
            quantity: "w1_separation".into(),
            profile: r.profile.clone(),
            k: Some(k),
            estimate: r.w1,
            std_error: r.w1_se,
            ci_low: r.w1 - 1.96 * r.w1_se,
            ci_high: r.w1 + 1.96 * r.w1_se,
        });
    }

    Ok(ExperimentResult {
        checks,
        summary,
        curves: rate_curves(&rows),
        rows,
    })
}
