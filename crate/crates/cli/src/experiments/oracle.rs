use sbmre_core::feynmankac::{pam_second_moment_oracle, MCConfig};
use sbmre_core::heatkernel::HeatSemigroup;
use sbmre_core::readout::Readout;
use sbmre_core::spde::{solve_pam, solve_stratonovich_pam, Scheme};
use sbmre_core::{rng, Estimate, Noise};

use super::{first_readout, point, Context};
use crate::report::Row;
use crate::CliError;

/// PAM ensemble moments against the heat flow and the Feynman–Kac oracle,
/// the noise-free degeneracy, and optionally the Stratonovich identity.
pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let t = p.f64("t", 1.0)?;
    let k_se = p.f64("k_se", 3.0)?;
    let grid = ctx.cfg.grid()?;
    let scheme = ctx.cfg.scheme()?;
    let kernel = ctx.cfg.kernel()?;
    let readout = first_readout(ctx)?;
    let f = readout.on(grid);
    let heat = HeatSemigroup::new(grid).apply(&f, t)?;
    let mut rows = Vec::new();

    if p.bool("degeneracy", true)? {
        let silent = Noise::silent(grid, scheme.dt)?;
        let v = solve_pam(&f, t, &silent, scheme, &[t])?.last();
        rows.push(Row::at_most("degeneracy", "sup_gap", v.distance(&heat)?, p.f64("degeneracy_tolerance", 1e-8)?));
    }

    if p.bool("ensemble", true)? {
        let x = point(ctx, "x")?;
        let y = point(ctx, "y")?;
        let factor = ctx.factor(&kernel, &grid)?;
        let root = ctx.seed_for(0);
        let samples = ctx.exec.try_map(ctx.cfg.config.mc.replicas, |r| -> Result<(f64, f64), CliError> {
            let noise = Noise::new(factor.clone(), scheme.dt, rng::derive_seed(root, &[r as u64]))?;
            let v = solve_pam(&f, t, &noise, scheme, &[t])?.last();
            let vx = v.at(&x)?;
            Ok((vx, vx * v.at(&y)?))
        })?;
        let mean = Estimate::from_samples(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
        let second = Estimate::from_samples(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
        rows.push(Row::within_se("ensemble", "mean", &mean, heat.at(&x)?, 0.0, k_se));

        let mc = &ctx.cfg.config.mc;
        let oracle_mc = MCConfig::new(mc.paths, mc.path_dt, ctx.seed_for(1))?.with_antithetic(mc.antithetic);
        let oracle = pam_second_moment_oracle(&readout, t, &x, &y, &kernel, &oracle_mc, &ctx.exec)?;
        match (kernel.as_constant(), &readout) {
            (Some(c), Readout::Constant { value }) => {
                let exact = (c * t).exp() * value * value;
                rows.push(Row::within_se("ensemble", "second_moment", &second, exact, 0.0, k_se));
                rows.push(Row::within_se("oracle", "second_moment", &oracle, exact, 0.0, k_se));
            }
            _ => {
                rows.push(Row::estimate("ensemble", "second_moment", &second));
                rows.push(Row::estimate("oracle", "second_moment", &oracle));
            }
        }
        rows.push(Row::within_se("agreement", "ensemble-oracle", &second, oracle.mean, oracle.se, p.f64("agree_se", 5.0)?));
    }

    if p.bool("stratonovich", false)? {
        let dt = p.f64("stratonovich_dt", 1e-4)?;
        let factor = ctx.factor(&kernel, &grid)?;
        let noise = Noise::new(factor, dt, ctx.seed_for(2))?;
        let pair = solve_stratonovich_pam(&f, t, &noise, Scheme::new(dt, scheme.ordering)?, &[t])?;
        let gap = pair.relative_gap.last().copied().unwrap_or(f64::NAN);
        rows.push(Row::at_most("stratonovich", "relative_gap", gap, p.f64("stratonovich_tolerance", 1e-3)?));
    }
    Ok(rows)
}
