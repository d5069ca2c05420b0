use sbmre_core::spde::{derivative_quotient, ComparisonReport};
use sbmre_core::{rng, Noise};

use super::{first_readout, Context};
use crate::report::Row;
use crate::CliError;

/// Shared-noise comparison inequalities between `u(λ)`, `u(λ + δ)`, the
/// difference quotient and the PAM solution, worst case over many runs.
pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let runs = p.usize("runs", 100)?;
    let delta = p.f64("delta", 0.1)?;
    let t = p.f64("t", 1.0)?;
    let tol = p.f64("tolerance", 1e-12)?;
    let fractions = p.f64s("save_fractions", &[0.25, 0.5, 0.75, 1.0])?;
    let save: Vec<f64> = fractions.iter().map(|s| s * t).collect();
    let grid = ctx.cfg.grid()?;
    let scheme = ctx.cfg.scheme()?;
    let factor = ctx.factor(&ctx.cfg.kernel()?, &grid)?;
    let f = first_readout(ctx)?.on(grid);
    let root = ctx.seed_for(0);

    let mut rows = Vec::new();
    for lambda in p.f64s("lambdas", &[0.5, 1.0])? {
        let reports = ctx.exec.try_map(runs, |r| -> Result<ComparisonReport, CliError> {
            let noise = Noise::new(factor.clone(), scheme.dt, rng::derive_seed(root, &[r as u64]))?;
            Ok(derivative_quotient(&f, lambda, delta, t, &noise, scheme, &save)?.comparison())
        })?;
        let worst = |g: fn(&ComparisonReport) -> f64| reports.iter().map(g).fold(f64::NEG_INFINITY, f64::max);
        let name = |what: &str| format!("lambda={lambda}:{what}");
        rows.push(Row::at_most("comparison", name("u_negative"), worst(|c| c.negativity), tol));
        rows.push(Row::at_most("comparison", name("u_above_linear"), worst(|c| c.above_linear), tol));
        rows.push(Row::at_most("comparison", name("u_not_monotone"), worst(|c| c.non_monotone), tol));
        rows.push(Row::at_most("comparison", name("quotient_negative"), worst(|c| c.quotient_negativity), tol));
        rows.push(Row::at_most("comparison", name("quotient_above_pam"), worst(|c| c.quotient_above_linear), tol));
    }
    Ok(rows)
}
