use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sbmre_cli::config::{LoadedConfig, EXPERIMENTS};
use sbmre_cli::report::RunReport;
use sbmre_cli::{execute, replay, CliError};

/// Runs, validates and replays sbmre experiments.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on a
/// configuration error or a refused replay.
#[derive(Parser)]
#[command(name = "sbmre", version)]
struct Cli {
    /// An experiment name, `replay` or `validate`.
    command: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Overrides `[experiment].seed`.
    #[arg(long, env = "SBMRE_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "SBMRE_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Overrides `[output].dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn summarize(report: &RunReport) {
    for r in report.failures() {
        eprintln!(
            "FAIL {}/{}: value {:.6e}, reference {}, tolerance {}",
            r.record,
            r.name,
            r.value,
            r.reference.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into()),
            r.tolerance.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into()),
        );
    }
    let failed = report.failures().count();
    println!(
        "{} [{}] seed {} workers {}: {} checks, {} failed, {:.1}s",
        report.experiment,
        report.config_hash,
        report.seed,
        report.workers,
        report.checks(),
        failed,
        report.wall_clock
    );
}

fn need(path: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    path.ok_or_else(|| CliError::Config(format!("missing --{flag}")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command.as_str() {
        "validate" => {
            let cfg = LoadedConfig::from_path(need(cli.config, "config")?)?;
            let seed = cli.seed.unwrap_or(cfg.seed());
            println!("{} ok, config hash {}", cfg.config.experiment.name, cfg.hash(seed));
            Ok(true)
        }
        "replay" => {
            let r = replay(&need(cli.manifest, "manifest")?, None)?;
            summarize(&r.report);
            if r.identical {
                println!("replay identical (sha256 {})", r.actual_sha256);
            } else {
                eprintln!("replay differs: expected sha256 {}, got {}", r.expected_sha256, r.actual_sha256);
            }
            Ok(r.identical && r.report.passed())
        }
        name if EXPERIMENTS.contains(&name) => {
            let path = need(cli.config, "config")?;
            let cfg = LoadedConfig::from_path(&path)?;
            if cfg.config.experiment.name != name {
                return Err(CliError::Config(format!(
                    "{} configures `{}`, not `{name}`",
                    path.display(),
                    cfg.config.experiment.name
                )));
            }
            let outcome = execute(&path, cli.seed, cli.workers, cli.out.as_deref())?;
            summarize(&outcome.report);
            println!("csv: {}", outcome.csv_path.display());
            println!("manifest: {}", outcome.manifest_path.display());
            Ok(outcome.report.passed())
        }
        other => Err(CliError::Config(format!(
            "unknown command `{other}` (expected replay, validate or one of {})",
            EXPERIMENTS.join(", ")
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("sbmre: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
