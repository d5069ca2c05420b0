use std::f64::consts::PI;

use sbmre_core::covariance::CovarianceKernel;
use sbmre_core::heatkernel::{
    bridge_potential, check_weight_domination, classify_regime, sup_potential, theta_potential, HeatSemigroup,
};
use sbmre_core::{rng, Field};

use super::{regime_rows, Context};
use crate::report::Row;
use crate::CliError;

/// Heat-flow sanity checks on the configured grid, persistence
/// classification along an `eps` ladder, the weighted domination constant
/// and the 3G bound.
pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let mut rows = heat_suite(ctx)?;

    let t_max = p.f64("t_max", 1.0)?;
    for rho in p.f64s("rhos", &[2.0, 4.0])? {
        for d in p.usizes("weight_dims", &[1, 3])? {
            let rep = check_weight_domination(rho, d, t_max)?;
            rows.push(Row::flag("domination", format!("rho={rho}:d={d}"), rep.constant, rep.finite && rep.constant.is_finite()));
        }
    }

    let alpha = p.f64("alpha", 3.0)?;
    for eps in p.f64s("eps", &[0.02, 0.05, 0.1])? {
        let kernel = CovarianceKernel::stationary_power(3, eps, alpha)?;
        let theta = theta_potential(&kernel, 3)?;
        let name = format!("eps={eps}");
        if alpha == 3.0 {
            let exact = 8.0 * PI * PI * eps / (3.0 * 3f64.sqrt());
            rows.push(Row::close("theta", name.clone(), theta, exact, 1e-8 * exact));
        } else {
            rows.push(Row::info("theta", name.clone(), theta));
        }
        rows.extend(regime_rows("regime", &name, &classify_regime(&kernel)?));
    }

    let pairs = p.usize("bridge_pairs", 100)?;
    if pairs > 0 {
        let eps = p.f64("bridge_eps", 0.05)?;
        let g = CovarianceKernel::stationary_power(3, eps, alpha)?;
        let bound = 2.0 * sup_potential(&g, 3)?;
        let mut r = rng::stream(ctx.seed_for(1), &[]);
        let mut worst = 0.0_f64;
        let mut asym = 0.0_f64;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..3).map(|_| 4.0 * rng::uniform(&mut r) - 2.0).collect();
            let y: Vec<f64> = (0..3).map(|_| 4.0 * rng::uniform(&mut r) - 2.0).collect();
            let xy = bridge_potential(&x, &y, &g)?;
            let yx = bridge_potential(&y, &x, &g)?;
            worst = worst.max(xy / bound);
            asym = asym.max((xy - yx).abs() / xy.abs().max(1e-300));
        }
        rows.push(Row::at_most("three_g", "max_ratio", worst, 1.0));
        rows.push(Row::at_most("three_g", "max_asymmetry", asym, 1e-10));
    }

    let kernel = ctx.cfg.kernel()?;
    if kernel.dim() >= 3 {
        rows.extend(regime_rows("regime", "kernel", &classify_regime(&kernel)?));
    }
    Ok(rows)
}

fn heat_suite(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let grid = ctx.cfg.grid()?;
    let s = p.f64("heat_s", 0.1)?;
    let t = p.f64("heat_t", 0.2)?;
    let mut r = rng::stream(ctx.seed_for(0), &[]);
    let values: Vec<f64> = (0..grid.len()).map(|_| rng::uniform(&mut r)).collect();
    let f = Field::new(grid, values)?;
    let heat = HeatSemigroup::new(grid);
    let pt = heat.apply(&f, t)?;
    let composed = heat.apply(&heat.apply(&f, s)?, t)?;
    let direct = heat.apply(&f, s + t)?;
    let scale = f.sup_norm();
    Ok(vec![
        Row::close("heat", "mass", pt.integral() / f.integral(), 1.0, 1e-10),
        Row::at_most("heat", "composition", composed.distance(&direct)? / scale, 1e-10),
        Row::close("heat", "identity", heat.apply(&f, 0.0)?.distance(&f)?, 0.0, 0.0),
        Row::at_most("heat", "negativity", (-pt.min()).max(0.0), 0.0),
    ])
}
