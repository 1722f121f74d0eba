use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use steinlab::{output, run, CliError, Config, Experiment};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    VerifyKernel,
    Identities,
    Rates,
    Bounds,
    Edgeworth,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::VerifyKernel => Experiment::VerifyKernel,
            Command::Identities => Experiment::Identities,
            Command::Rates => Experiment::Rates,
            Command::Bounds => Experiment::Bounds,
            Command::Edgeworth => Experiment::Edgeworth,
        }
    }
}

/// Runs an experiment and writes its tables. Exit code 0 when every check
/// passes, 1 on a failed check or numerical error, 2 on a configuration error.
#[derive(Debug, Parser)]
#[command(name = "steinlab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `mc.master_seed`).
    #[arg(long, env = "STEINLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads (overrides `mc.workers`).
    #[arg(long)]
    workers: Option<usize>,
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let mut cfg = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.mc.master_seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.mc.workers = w;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.display().to_string();
    }
    let experiment = Experiment::from(args.command);
    let result = run(experiment, &cfg)?;
    for c in &result.checks {
        println!(
            "{} {:<48} value={:<12.6e} threshold={:.6e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check,
            c.value,
            c.threshold
        );
    }
    let written = output::write_result(PathBuf::from(&cfg.output.dir).as_path(), experiment, &cfg, &result)?;
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(result.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("steinlab: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("steinlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
