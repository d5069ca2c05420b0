use sbmre_core::covariance::CovarianceKernel;
use sbmre_core::dual::{duality_gap, third_moment_scan, DualMeasure};
use sbmre_core::heatkernel::WeightFamily;

use super::{first_readout, point, Context};
use crate::report::Row;
use crate::CliError;

/// Log-Laplace side against the function-valued dual along a ladder of
/// particle scales `n`.
pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let t = p.f64("t", 1.0)?;
    let ladder = p.usizes("ladder", &[10, 40, 160])?;
    if ladder.is_empty() {
        return Err(CliError::Config("params.ladder is empty".into()));
    }
    let k_se = p.f64("k_se", 3.0)?;
    let gap_se = p.f64("gap_se", 2.0)?;
    let grid = ctx.cfg.grid()?;
    let scheme = ctx.cfg.scheme()?;
    let phi = first_readout(ctx)?.on(grid);
    let mu = match p.str("measure", "lebesgue")?.as_str() {
        "lebesgue" => DualMeasure::TorusLebesgue,
        "point" => DualMeasure::PointMasses(vec![(point(ctx, "x")?, p.f64("mass", 1.0)?)]),
        other => return Err(CliError::Config(format!("params.measure: unknown measure `{other}`"))),
    };
    let replicas = ctx.cfg.config.mc.replicas;
    let mut rows = Vec::new();

    let zero = ctx.factor(&CovarianceKernel::constant(grid.dim(), 0.0)?, &grid)?;
    let g = duality_gap(&phi, &mu, t, ladder[0], &zero, scheme, replicas, ctx.seed_for(0), &ctx.exec)?;
    rows.push(Row::within_se("zero_kernel", format!("gap:n={}", ladder[0]), &g.gap, 0.0, 0.0, gap_se));

    let factor = ctx.factor(&ctx.cfg.kernel()?, &grid)?;
    let mut previous: Option<sbmre_core::Estimate> = None;
    for &n in &ladder {
        let g = duality_gap(&phi, &mu, t, n, &factor, scheme, replicas, ctx.seed_for(1), &ctx.exec)?;
        rows.push(Row::estimate("ladder", format!("left:n={n}"), &g.left));
        rows.push(Row::estimate("ladder", format!("right:n={n}"), &g.right));
        rows.push(Row::estimate("ladder", format!("gap:n={n}"), &g.gap));
        rows.push(Row::within_se("jumps", format!("mean:n={n}"), &g.mean_jumps, n as f64 * t, 0.0, k_se));
        if let Some(prev) = previous {
            let slack = g.gap.se.hypot(prev.se);
            rows.push(Row {
                reference: Some(prev.mean.abs()),
                tolerance: Some(slack),
                pass: Some(g.gap.mean.abs() <= prev.mean.abs() + slack),
                ..Row::info("ladder", format!("non_increasing:n={n}"), g.gap.mean.abs())
            });
        }
        previous = Some(g.gap);
    }

    if p.bool("third_moment", true)? {
        let weight = WeightFamily::new(p.f64("rho", 2.0)?)?;
        let times = p.f64s("third_times", &[0.5 * t, t])?;
        let coords = p.f64s("third_probes", &vec![0.0; grid.dim()])?;
        if coords.is_empty() || coords.len() % grid.dim() != 0 {
            return Err(CliError::Config("params.third_probes must hold whole points".into()));
        }
        let probes: Vec<Vec<f64>> = coords.chunks(grid.dim()).map(<[f64]>::to_vec).collect();
        let reps = p.usize("third_replicas", replicas)?;
        let scan = third_moment_scan(&phi, &weight, &times, &ladder, &probes, &factor, scheme, reps, ctx.seed_for(2), &ctx.exec)?;
        rows.push(Row::info("third_moment", "weight_multiple", scan.weight_multiple));
        for (n, m) in &scan.max_ratio {
            rows.push(Row::info("third_moment", format!("max_ratio:n={n}"), *m));
        }
        rows.push(Row::at_most("third_moment", "spread", scan.spread, p.f64("spread_tolerance", 0.5)?));
    }
    Ok(rows)
}
