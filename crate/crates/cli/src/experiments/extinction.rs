use sbmre_core::heatkernel::classify_regime;
use sbmre_core::spde::{solve_log_laplace, total_mass_series, Scheme};
use sbmre_core::{rng, Estimate, Field, Noise};

use super::{regime_rows, Context};
use crate::report::Row;
use crate::CliError;

fn logistic(t: f64, k: f64) -> f64 {
    1.0 / (t / 2.0 + 1.0 / k)
}

/// Log-Laplace solutions from constant data `k`: exact decay without
/// noise, and the Jensen bound `E u ≤ 1/(t/2 + 1/k)` with noise.
pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let ks = p.f64s("ks", &[1.0, 10.0])?;
    let times = p.f64s("times", &[0.5, 1.0, 2.0, 3.0, 4.0])?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let k_se = p.f64("k_se", 3.0)?;
    let grid = ctx.cfg.grid()?;
    let scheme = ctx.cfg.scheme()?;
    let mut rows = Vec::new();

    let silent_dt = p.f64("silent_dt", 1e-4)?;
    let silent_scheme = Scheme::new(silent_dt, scheme.ordering)?;
    let silent = Noise::silent(grid, silent_dt)?;
    for &k in &ks {
        let f = Field::constant(grid, k);
        let sol = solve_log_laplace(&f, 1.0, horizon, &silent, silent_scheme, &times)?;
        for (s, &t) in sol.slices.iter().zip(&sol.times) {
            let err = s.distance(&Field::constant(grid, logistic(t, k)))?;
            rows.push(Row::at_most("silent", format!("k={k}:t={t}"), err, p.f64("silent_tolerance", 1e-6)?));
        }
    }

    let kernel = ctx.cfg.kernel()?;
    let factor = ctx.factor(&kernel, &grid)?;
    let replicas = ctx.cfg.config.mc.replicas;
    let root = ctx.seed_for(0);
    for &k in &ks {
        let f = Field::constant(grid, k);
        let runs = ctx.exec.try_map(replicas, |r| -> Result<(Vec<f64>, Vec<f64>), CliError> {
            let noise = Noise::new(factor.clone(), scheme.dt, rng::derive_seed(root, &[r as u64]))?;
            let sol = solve_log_laplace(&f, 1.0, horizon, &noise, scheme, &times)?;
            let means = sol.slices.iter().map(|s| s.mean()).collect();
            Ok((means, total_mass_series(&sol)))
        })?;
        for (i, &t) in times.iter().enumerate() {
            let e = Estimate::from_samples(&runs.iter().map(|r| r.0[i]).collect::<Vec<_>>());
            let bound = logistic(t, k);
            rows.push(Row {
                pass: Some(e.mean <= bound + k_se * e.se),
                tolerance: Some(k_se * e.se),
                ..Row::estimate("jensen", format!("k={k}:t={t}"), &e)
            }
            .with_reference(bound));
            let mass = Estimate::from_samples(&runs.iter().map(|r| r.1[i]).collect::<Vec<_>>());
            rows.push(Row::estimate("mass", format!("k={k}:t={t}"), &mass));
        }
    }
    rows.extend(regime_rows("regime", "kernel", &classify_regime(&kernel)?));
    Ok(rows)
}
