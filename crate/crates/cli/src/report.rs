//! Long-format CSV rows and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sbmre_core::Estimate;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One output value. Checks carry a tolerance and a verdict; informational
/// rows leave both empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub record: String,
    pub name: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub se: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl Row {
    pub fn info(record: &str, name: impl Into<String>, value: f64) -> Self {
        Row {
            record: record.into(),
            name: name.into(),
            value,
            reference: None,
            se: None,
            tolerance: None,
            pass: None,
        }
    }

    pub fn estimate(record: &str, name: impl Into<String>, e: &Estimate) -> Self {
        Row {
            se: Some(e.se),
            ..Row::info(record, name, e.mean)
        }
    }

    /// `|value - reference| <= tolerance`.
    pub fn close(record: &str, name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        Row {
            reference: Some(reference),
            tolerance: Some(tolerance),
            pass: Some((value - reference).abs() <= tolerance),
            ..Row::info(record, name, value)
        }
    }

    /// Estimate within `k` standard errors of `reference` (whose own
    /// standard error `ref_se` is combined in).
    pub fn within_se(record: &str, name: impl Into<String>, e: &Estimate, reference: f64, ref_se: f64, k: f64) -> Self {
        let se = e.se.hypot(ref_se);
        let tolerance = k * se + sbmre_core::stats::float_floor(reference);
        Row {
            se: Some(e.se),
            ..Row::close(record, name, e.mean, reference, tolerance)
        }
    }

    /// `value <= tolerance`, for error measures and worst violations.
    pub fn at_most(record: &str, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Row {
            tolerance: Some(tolerance),
            pass: Some(value <= tolerance),
            ..Row::info(record, name, value)
        }
    }

    pub fn flag(record: &str, name: impl Into<String>, value: f64, pass: bool) -> Self {
        Row {
            pass: Some(pass),
            ..Row::info(record, name, value)
        }
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub rows: Vec<Row>,
    pub wall_clock: f64,
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    pub fn checks(&self) -> usize {
        self.rows.iter().filter(|r| r.pass.is_some()).count()
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["config_hash", "experiment", "record", "name", "value", "reference", "se", "tolerance", "pass"])?;
        for r in &self.rows {
            let pass = r.pass.map(|p| p.to_string()).unwrap_or_default();
            w.write_record([
                self.config_hash.as_str(),
                self.experiment.as_str(),
                r.record.as_str(),
                r.name.as_str(),
                &num(r.value),
                &opt(r.reference),
                &opt(r.se),
                &opt(r.tolerance),
                &pass,
            ])?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub experiment: String,
    pub config_path: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub csv_path: PathBuf,
    pub csv_sha256: String,
    pub wall_clock: f64,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = toml::to_string(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
