//! Output files. Everything written is a pure function of the resolved
//! configuration, so reruns reproduce the files byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::error::CliError;
use crate::experiments::{Experiment, ExperimentResult};

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes checks, rows, summary, plot data and provenance into `dir` and
/// returns the paths written.
pub fn write_result(
    dir: &Path,
    experiment: Experiment,
    cfg: &Config,
    result: &ExperimentResult,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let stem = experiment.file_stem();
    let mut written = Vec::new();

    let checks = dir.join(format!("{stem}_checks.csv"));
    write_csv(&checks, &result.checks)?;
    written.push(checks);

    if !result.rows.is_empty() {
        let rows = dir.join(format!("{stem}_rows.csv"));
        write_csv(&rows, &result.rows)?;
        written.push(rows);
    }
    if !result.summary.is_empty() {
        let summary = dir.join(format!("{stem}_summary.csv"));
        write_csv(&summary, &result.summary)?;
        written.push(summary);
    }
    if !result.curves.is_empty() {
        let plots = dir.join(format!("{stem}_plots"));
        fs::create_dir_all(&plots)?;
        for (name, points) in &result.curves {
            let path = plots.join(name);
            let mut f = fs::File::create(&path)?;
            for (x, y) in points {
                writeln!(f, "{x} {y}")?;
            }
            written.push(path);
        }
    }

    let provenance = dir.join(format!("{stem}_provenance.toml"));
    let mut f = fs::File::create(&provenance)?;
    writeln!(f, "# steinlab {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "# experiment = {experiment}")?;
    writeln!(f, "# seed = {}", cfg.mc.master_seed)?;
    writeln!(f, "# rerun with: steinlab {experiment} --config <this file>")?;
    f.write_all(cfg.to_toml().as_bytes())?;
    written.push(provenance);
    Ok(written)
}
