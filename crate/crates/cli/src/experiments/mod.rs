//! The named experiments. Each returns report rows; checks carry their
//! tolerance and verdict so the report decides the exit code.

mod comparison;
mod duality;
mod extinction;
mod lyapunov;
mod moments;
mod oracle;
mod persistence;
mod threshold;

use std::sync::Arc;

use sbmre_core::covariance::grid_covariance_factor;
use sbmre_core::heatkernel::Regime;
use sbmre_core::{rng, Executor, Factor, Grid, Kernel};

use crate::config::LoadedConfig;
use crate::report::Row;
use crate::CliError;

pub struct Context<'a> {
    pub cfg: &'a LoadedConfig,
    pub seed: u64,
    pub exec: Executor,
}

impl Context<'_> {
    /// Seed of an independent stream for one component of the experiment.
    pub fn seed_for(&self, component: u64) -> u64 {
        rng::derive_seed(self.seed, &[component])
    }

    pub fn factor(&self, kernel: &Kernel, grid: &Grid) -> Result<Arc<Factor>, CliError> {
        Ok(Arc::new(grid_covariance_factor(kernel, grid)?))
    }
}

pub fn dispatch(ctx: &Context) -> Result<Vec<Row>, CliError> {
    match ctx.cfg.config.experiment.name.as_str() {
        "moments-triangle" => moments::run(ctx),
        "pam-oracle" => oracle::run(ctx),
        "comparison-suite" => comparison::run(ctx),
        "threshold-table" => threshold::run(ctx),
        "extinction-scan" => extinction::run(ctx),
        "persistence-scan" => persistence::run(ctx),
        "duality-ladder" => duality::run(ctx),
        "lyapunov-ladder" => lyapunov::run(ctx),
        other => Err(CliError::Config(format!("unknown experiment `{other}`"))),
    }
}

/// Informational rows describing a regime classification.
fn regime_rows(record: &str, label: &str, regime: &Regime) -> Vec<Row> {
    match regime {
        Regime::PersistenceSufficient { theta, threshold, gap } => vec![
            Row::info(record, format!("{label}:persistence"), 1.0),
            Row::info(record, format!("{label}:theta"), *theta),
            Row::info(record, format!("{label}:threshold"), *threshold),
            Row::info(record, format!("{label}:gap"), *gap),
        ],
        Regime::ExtinctionSufficient { .. } => vec![Row::info(record, format!("{label}:extinction"), 1.0)],
        Regime::Inconclusive { gap, .. } => {
            let mut rows = vec![Row::info(record, format!("{label}:inconclusive"), 1.0)];
            if let Some(g) = gap {
                rows.push(Row::info(record, format!("{label}:gap"), *g));
            }
            rows
        }
    }
}

fn first_readout(ctx: &Context) -> Result<sbmre_core::ReadoutFn, CliError> {
    Ok(ctx.cfg.readouts()?.remove(0))
}

/// Probe point from `params.<key>`, defaulting to the origin.
fn point(ctx: &Context, key: &str) -> Result<Vec<f64>, CliError> {
    let d = ctx.cfg.config.grid.dim;
    let x = ctx.cfg.params().f64s(key, &vec![0.0; d])?;
    if x.len() != d {
        return Err(CliError::Config(format!("params.{key} needs {d} coordinates")));
    }
    Ok(x)
}
