//! Experiment runner: configuration, orchestration, CSV and manifest
//! output, and replay.

pub mod config;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use sbmre_core::Executor;

use config::LoadedConfig;
use experiments::Context;
use report::{sha256_hex, Manifest, RunReport, VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sbmre_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("replay refused: {0}")]
    Refused(String),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use sbmre_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Refused(_) => 2,
            CliError::Core(E::InvalidParameter { .. } | E::DimensionMismatch { .. } | E::Indefinite { .. } | E::UnsupportedKernel(_)) => 2,
            _ => 1,
        }
    }
}

/// Runs the configured experiment in memory.
pub fn run_experiment(cfg: &LoadedConfig, seed: u64, workers: usize) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let ctx = Context {
        cfg,
        seed,
        exec: Executor::new(workers),
    };
    let rows = experiments::dispatch(&ctx)?;
    Ok(RunReport {
        experiment: cfg.config.experiment.name.clone(),
        config_hash: cfg.hash(seed),
        seed,
        workers,
        rows,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}

/// A finished run written to disk.
pub struct Outcome {
    pub report: RunReport,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Runs and writes `<experiment>-<hash>.csv` plus a manifest into `out`
/// (default: the config's output directory, relative to the config file).
pub fn execute(config_path: &Path, seed: Option<u64>, workers: usize, out: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = LoadedConfig::from_path(config_path)?;
    let seed = seed.unwrap_or(cfg.seed());
    let report = run_experiment(&cfg, seed, workers)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => cfg.base.join(&cfg.config.output.dir),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let stem = format!("{}-{}", report.experiment, report.config_hash);
    let csv_path = dir.join(format!("{stem}.csv"));
    let bytes = report.csv_bytes()?;
    std::fs::write(&csv_path, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    let manifest = Manifest {
        version: VERSION.to_string(),
        experiment: report.experiment.clone(),
        config_path: std::path::absolute(config_path).map_err(|e| CliError::Io(e.to_string()))?,
        config_hash: report.config_hash.clone(),
        seed,
        workers,
        csv_path: std::path::absolute(&csv_path).map_err(|e| CliError::Io(e.to_string()))?,
        csv_sha256: sha256_hex(&bytes),
        wall_clock: report.wall_clock,
    };
    let manifest_path = dir.join(format!("{stem}.manifest.toml"));
    manifest.save(&manifest_path)?;
    Ok(Outcome {
        report,
        csv_path,
        manifest_path,
    })
}

/// Result of re-running a manifest.
pub struct Replay {
    pub report: RunReport,
    pub identical: bool,
    pub expected_sha256: String,
    pub actual_sha256: String,
}

/// Re-runs a recorded experiment and compares CSV bytes. Refuses when the
/// tool version or the config hash no longer match the manifest.
pub fn replay(manifest_path: &Path, workers: Option<usize>) -> Result<Replay, CliError> {
    let m = Manifest::load(manifest_path)?;
    if m.version != VERSION {
        return Err(CliError::Refused(format!("version mismatch:\n- manifest: {}\n+ current:  {VERSION}", m.version)));
    }
    let cfg = LoadedConfig::from_path(&m.config_path)?;
    let hash = cfg.hash(m.seed);
    if hash != m.config_hash {
        return Err(CliError::Refused(format!(
            "config {} changed since the run:\n- config_hash {}\n+ config_hash {hash}",
            m.config_path.display(),
            m.config_hash
        )));
    }
    if cfg.config.experiment.name != m.experiment {
        return Err(CliError::Refused(format!(
            "experiment mismatch:\n- {}\n+ {}",
            m.experiment, cfg.config.experiment.name
        )));
    }
    let report = run_experiment(&cfg, m.seed, workers.unwrap_or(m.workers))?;
    let actual = sha256_hex(&report.csv_bytes()?);
    Ok(Replay {
        identical: actual == m.csv_sha256,
        report,
        expected_sha256: m.csv_sha256,
        actual_sha256: actual,
    })
}
