//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Runs the same pipelines as the `steinlab` binary with the default
//! configuration (d = 2, R = 1) unless a criterion fixes a different scale.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use steinlab::{run, Check, Config, Experiment, ExperimentResult};
use steinlab_core::sampling::{derive_seed, rng_from_seed};
use steinlab_core::stein::w1_to_gaussian;

struct Line {
    id: usize,
    pass: bool,
    text: String,
}

fn checks_with<'a>(res: &'a ExperimentResult, prefix: &str) -> Vec<&'a Check> {
    res.checks.iter().filter(|c| c.check.starts_with(prefix)).collect()
}

/// Passes if every matching check passes (and at least one matched);
/// reports the worst value / threshold ratio.
fn group(id: usize, title: &str, res: &ExperimentResult, prefixes: &[&str]) -> Line {
    let sel: Vec<&Check> = prefixes.iter().flat_map(|p| checks_with(res, p)).collect();
    let pass = !sel.is_empty() && sel.iter().all(|c| c.pass);
    let worst = sel
        .iter()
        .max_by(|a, b| a.severity().total_cmp(&b.severity()))
        .map(|c| format!("worst {} = {:.4e} vs {:.4e}", c.check, c.value, c.threshold))
        .unwrap_or_else(|| "no checks ran".into());
    Line {
        id,
        pass,
        text: format!("{title}: {} checks, {worst}", sel.len()),
    }
}

fn failed(id: usize, title: &str, err: impl std::fmt::Display) -> Line {
    Line {
        id,
        pass: false,
        text: format!("{title}: error: {err}"),
    }
}

fn timed(e: Experiment, cfg: &Config) -> (Result<ExperimentResult, steinlab::CliError>, Duration) {
    let t = Instant::now();
    let r = run(e, cfg);
    (r, t.elapsed())
}

fn kernel_criteria(lines: &mut Vec<Line>) {
    let mut cfg = Config::default();
    cfg.verify_kernel.probes = 20;
    cfg.verify_kernel.compat_pairs = 10_000;
    cfg.verify_kernel.tolerance = 1e-2;
    match timed(Experiment::VerifyKernel, &cfg) {
        (Ok(res), dt) => {
            let mut l = group(1, "kernel inversion, 20 probes, max error <= 1e-2", &res, &["divergence_identity"]);
            l.pass &= dt <= Duration::from_secs(120);
            l.text.push_str(&format!(", runtime {:.1}s (limit 120s)", dt.as_secs_f64()));
            lines.push(l);
            lines.push(group(2, "kernel compatibility, 1e4 pairs, |G| <= 1e-12", &res, &["compatibility"]));
        }
        (Err(e), _) => {
            lines.push(failed(1, "kernel inversion", &e));
            lines.push(failed(2, "kernel compatibility", &e));
        }
    }
}

fn identity_criteria(lines: &mut Vec<Line>) {
    let mut cfg = Config::default();
    cfg.mc.replications = 100_000;
    cfg.mc.n_se = 4.0;
    cfg.identities.realizations = 10;
    cfg.identities.probes = 10;
    cfg.identities.tolerance = 1e-2;
    let specs: [(usize, &str, &[&str]); 5] = [
        (3, "isometry, normalized member, 1e5 configurations, within 4 SE", &["isometry_"]),
        (4, "duality, two fixtures, 1e5 configurations, gap <= 4 combined SE", &["duality_"]),
        (5, "commutation, 10 realizations x 10 probes, error <= 1e-2", &["commutation_"]),
        (6, "moment identity, (n,m) in {1,2}x{1,2,3}, two pairs, rel. error <= 1e-2", &["moment_"]),
        (7, "Gamma/kappa, k in {2,3,4}, rel. error <= 1e-2", &["gamma_"]),
    ];
    match run(Experiment::Identities, &cfg) {
        Ok(res) => lines.extend(specs.iter().map(|(id, t, p)| group(*id, t, &res, p))),
        Err(e) => lines.extend(specs.iter().map(|(id, t, _)| failed(*id, t, &e))),
    }
}

fn edgeworth_criterion(lines: &mut Vec<Line>) {
    let mut cfg = Config::default();
    cfg.mc.replications = 1_000_000;
    cfg.edgeworth.profile = "g_balanced".into();
    cfg.edgeworth.k = 16;
    cfg.edgeworth.orders = vec![1, 2];
    cfg.edgeworth.test_function = "sin".into();
    let title = "Edgeworth residual, sin, n in {1,2}, balanced k=16, 1e6 replications, <= bound + 4 SE";
    lines.push(match run(Experiment::Edgeworth, &cfg) {
        Ok(res) => group(8, title, &res, &["residual_"]),
        Err(e) => failed(8, title, e),
    });
}

fn bounds_criterion(lines: &mut Vec<Line>) {
    let mut cfg = Config::default();
    cfg.profiles = vec!["g_plus".into(), "g_balanced".into()];
    cfg.k_grid = vec![1, 4, 16, 64];
    cfg.mc.replications = 100_000;
    let title = "bound validity, both profiles, k in {1,4,16,64}, 1e5 replications, W1 <= bound + 4 SE";
    lines.push(match timed(Experiment::Bounds, &cfg) {
        (Ok(res), dt) => {
            let mut l = group(9, title, &res, &["w1_le_"]);
            l.pass &= dt <= Duration::from_secs(1800);
            l.text.push_str(&format!(", runtime {:.1}s (limit 1800s)", dt.as_secs_f64()));
            l
        }
        (Err(e), _) => failed(9, title, e),
    });
}

fn rates_criterion(lines: &mut Vec<Line>) {
    let mut cfg = Config::default();
    cfg.rates.slope_k_max = 256;
    cfg.rates.slope_tolerance = 1e-3;
    cfg.rates.separation_k = 64;
    cfg.rates.separation_pair = vec!["g_balanced".into(), "g_plus".into()];
    cfg.rates.separation_replications = 1_000_000;
    let title = "rates, classical slope -1/2 and O(1/k) slope -1 within 1e-3, W1 separation >= 4 SE at k=64";
    lines.push(match run(Experiment::Rates, &cfg) {
        Ok(res) => group(10, title, &res, &["classical_slope_", "o1k_slope_", "separation_"]),
        Err(e) => failed(10, title, e),
    });
}

fn calibration_criterion(lines: &mut Vec<Line>) {
    let title = "W1 calibration, zero sample = sqrt(2/pi) +- 1e-12, Gaussian n=1e5 <= 0.01 in >= 99/100 seeds";
    let zero = match w1_to_gaussian(&[0.0; 1000]) {
        Ok(v) => v,
        Err(e) => return lines.push(failed(11, title, e)),
    };
    let zero_err = (zero - (2.0 / std::f64::consts::PI).sqrt()).abs();
    let mut good = 0;
    let mut worst = 0.0f64;
    for s in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(0xCA11_B4A7, s));
        let xs: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let w = w1_to_gaussian(&xs).unwrap_or(f64::INFINITY);
        worst = worst.max(w);
        good += usize::from(w <= 0.01);
    }
    lines.push(Line {
        id: 11,
        pass: zero_err <= 1e-12 && good >= 99,
        text: format!("{title}: zero-sample error {zero_err:.2e}, {good}/100 seeds, max W1 {worst:.4e}"),
    });
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut lines = Vec::new();
    kernel_criteria(&mut lines);
    identity_criteria(&mut lines);
    edgeworth_criterion(&mut lines);
    bounds_criterion(&mut lines);
    rates_criterion(&mut lines);
    calibration_criterion(&mut lines);
    lines.sort_by_key(|l| l.id);
    for l in &lines {
        println!("criterion {:>2} {} {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.text);
    }
    let n_fail = lines.iter().filter(|l| !l.pass).count();
    println!(
        "acceptance: {} passed, {n_fail} failed in {:.1}s",
        lines.len() - n_fail,
        start.elapsed().as_secs_f64()
    );
    if n_fail == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
