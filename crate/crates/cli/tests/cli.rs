//! End-to-end runs of the `steinlab` binary: exit codes, outputs,
//! reproducibility and the designed-to-fail configurations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn steinlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steinlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("STEINLAB_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_config(cmd: &str, config: &Path) -> (i32, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let out = steinlab(&[cmd, "--config", config.to_str().unwrap()], dir.path());
    (out.status.code().unwrap(), dir)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn verify_kernel_default_passes_and_writes_outputs() {
    let (code, dir) = run_config("verify-kernel", &configs().join("default.toml"));
    assert_eq!(code, 0);
    let checks = read(dir.path(), "verify_kernel_checks.csv");
    assert!(checks.starts_with("check,value,threshold,pass\n"));
    assert_eq!(checks.lines().count(), 6);
    assert!(!checks.contains(",false"));
    let prov = read(dir.path(), "verify_kernel_provenance.toml");
    assert!(prov.contains("master_seed = 20240601"));
}

#[test]
fn config_errors_exit_with_two() {
    let (code, _) = run_config("verify-kernel", &configs().join("negative/invalid_radius.toml"));
    assert_eq!(code, 2);
    let tmp = tempfile::tempdir().unwrap();
    for text in ["radius = 0.0", "dimm = 2", "k_grid = [4, 1]", "[mc]\nreplications = 10"] {
        let cfg = write_config(tmp.path(), text);
        let cmd = if text.contains("replications") { "rates" } else { "bounds" };
        let (code, _) = run_config(cmd, &cfg);
        assert_eq!(code, 2, "{text}");
    }
    let (code, _) = run_config("bounds", &tmp.path().join("missing.toml"));
    assert_eq!(code, 2);
}

#[test]
fn seed_precedence_flag_over_env_over_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[mc]\nmaster_seed = 5\n[verify_kernel]\nprobes = 2\ncompat_pairs = 100\nbound_pairs = 100\n");
    let seed_of = |dir: &Path| {
        let prov = read(dir, "verify_kernel_provenance.toml");
        prov.lines().find(|l| l.starts_with("master_seed")).unwrap().to_string()
    };
    let run = |env: Option<&str>, flag: Option<&str>| {
        let out = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_steinlab"));
        cmd.args(["verify-kernel", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
        cmd.env_remove("STEINLAB_SEED").env("RUST_LOG", "warn");
        if let Some(e) = env {
            cmd.env("STEINLAB_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        seed_of(out.path())
    };
    assert_eq!(run(None, None), "master_seed = 5");
    assert_eq!(run(Some("7"), None), "master_seed = 7");
    assert_eq!(run(Some("7"), Some("9")), "master_seed = 9");
}

#[test]
fn bounds_output_is_reproducible_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "profiles = [\"g_plus\"]\nk_grid = [1, 16]\n[kernel]\nkd_pairs = 500\n[mc]\nreplications = 3000\n",
    );
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = cfg.to_str().unwrap();
    assert!(steinlab(&["bounds", "--config", c, "--workers", "1"], a.path()).status.success());
    assert!(steinlab(&["bounds", "--config", c, "--workers", "3"], b.path()).status.success());
    let rows = read(a.path(), "bounds_rows.csv");
    assert!(rows.starts_with(
        "profile,d,R,k,n_mc,seed,w1,w1_se,bound_classical,bound_third_cumulant,bound_o1k,kd_empirical\n"
    ));
    assert_eq!(rows.lines().count(), 3);
    assert_eq!(rows, read(b.path(), "bounds_rows.csv"));
    assert_eq!(read(a.path(), "bounds_summary.csv"), read(b.path(), "bounds_summary.csv"));
    let plot = read(a.path(), "bounds_plots/g_plus_w1.dat");
    assert_eq!(plot.lines().count(), 2);
    assert!(plot.starts_with("1 "));
}

#[test]
fn provenance_file_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "profiles = [\"g_balanced\"]\nk_grid = [4]\n[kernel]\nkd_pairs = 500\n[mc]\nreplications = 2000\nmaster_seed = 11\n",
    );
    let (code, first) = run_config("bounds", &cfg);
    assert_eq!(code, 0);
    let (code, second) = run_config("bounds", &first.path().join("bounds_provenance.toml"));
    assert_eq!(code, 0);
    for f in ["bounds_rows.csv", "bounds_checks.csv", "bounds_summary.csv"] {
        assert_eq!(read(first.path(), f), read(second.path(), f), "{f}");
    }
}

#[test]
fn negative_control_verify_kernel() {
    let (code, dir) = run_config("verify-kernel", &configs().join("negative/verify_kernel_misplaced_eta.toml"));
    assert_eq!(code, 1);
    let checks = read(dir.path(), "verify_kernel_checks.csv");
    assert!(checks.lines().any(|l| l.starts_with("compatibility_max_abs_kernel") && l.ends_with(",false")));
}

#[test]
fn negative_control_identities() {
    let (code, dir) = run_config("identities", &configs().join("negative/identities_h_overlaps_eta.toml"));
    assert_eq!(code, 1);
    let checks = read(dir.path(), "identities_checks.csv");
    assert!(checks.lines().any(|l| l.starts_with("commutation_max_error") && l.ends_with(",false")));
}

#[test]
fn negative_control_bounds() {
    let (code, _) = run_config("bounds", &configs().join("negative/bounds_zero_kd.toml"));
    assert_eq!(code, 1);
}

#[test]
fn negative_control_edgeworth() {
    let (code, _) = run_config("edgeworth", &configs().join("negative/edgeworth_zero_kd.toml"));
    assert_eq!(code, 1);
}

#[test]
fn negative_control_rates() {
    let (code, dir) = run_config("rates", &configs().join("negative/rates_reversed_pair.toml"));
    assert_eq!(code, 1);
    let checks = read(dir.path(), "rates_checks.csv");
    assert!(checks.lines().any(|l| l.starts_with("separation_") && l.ends_with(",false")));
    assert!(checks.lines().filter(|l| l.contains("slope")).all(|l| l.ends_with(",true")));
}
