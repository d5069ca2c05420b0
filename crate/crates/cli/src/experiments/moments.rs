use sbmre_core::feynmankac::{first_moment_rhs, second_moment_rhs, MCConfig};
use sbmre_core::particles::{
    empirical_pairing, epoch_readout, martingale_series, run_observed, BranchingConfig, Environment, EpochReadout,
};
use sbmre_core::readout::Readout;
use sbmre_core::spde::{solve_log_laplace, solve_pam};
use sbmre_core::{rng, Estimate, Noise};

use super::{first_readout, point, Context};
use crate::report::Row;
use crate::CliError;

/// `E_ν⟨f, X_t⟩²` for `ν = δ_x` three ways: the branching particle system,
/// the Feynman–Kac formula and the log-Laplace SPDE (second derivative in
/// `λ` at zero). Optionally the martingale residual of the particles.
pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let t = p.f64("t", 1.0)?;
    let n = p.usize("n", 200)?;
    let k_se = p.f64("k_se", 3.0)?;
    let agree_se = p.f64("agree_se", 5.0)?;
    let checks = p.strs("checks", &["moments"])?;
    let x = point(ctx, "x")?;
    let kernel = ctx.cfg.kernel()?;
    let readout = first_readout(ctx)?;
    let replicas = ctx.cfg.config.mc.replicas;
    let mut rows = Vec::new();
    for c in &checks {
        if c != "moments" && c != "martingale" {
            return Err(CliError::Config(format!("params.checks: unknown check `{c}`")));
        }
    }
    let moments = checks.iter().any(|c| c == "moments");
    let martingale = checks.iter().any(|c| c == "martingale");

    let environment = Environment::Field(kernel.clone());
    let branching = BranchingConfig::from_point(n, environment.clone(), &x, n, t)?;
    let save_times = p.f64s("martingale_times", &[0.2, 0.4, 0.6, 0.8, 1.0])?;
    let save_epochs: Vec<usize> = save_times.iter().map(|&s| branching.epoch_of(s)).collect();
    if martingale && save_epochs.iter().any(|&e| e > branching.epochs()) {
        return Err(CliError::Config("params.martingale_times must not exceed t".into()));
    }
    let root = ctx.seed_for(0);
    let runs = ctx.exec.try_map(replicas, |r| -> Result<((f64, f64), Vec<(f64, f64)>), CliError> {
        let mut readouts: Vec<EpochReadout> = Vec::new();
        let mut failure = None;
        let last = run_observed(&branching, rng::derive_seed(root, &[r as u64]), |pop| {
            if martingale && failure.is_none() {
                match epoch_readout(pop, &readout, &environment) {
                    Ok(e) => readouts.push(e),
                    Err(e) => failure = Some(e),
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        let pairing = empirical_pairing(&last, &readout);
        let series = martingale_series(&readouts, n);
        let at = if martingale {
            save_epochs
                .iter()
                .map(|&e| (series.residual[e], series.quadratic_variation[e]))
                .collect()
        } else {
            Vec::new()
        };
        Ok((pairing, at))
    })?;

    if moments {
        let grid = ctx.cfg.grid()?;
        let f = readout.on(grid);
        let first = Estimate::from_samples(&runs.iter().map(|r| r.0 .0).collect::<Vec<_>>());
        let particles = Estimate::from_samples(&runs.iter().map(|r| r.0 .1).collect::<Vec<_>>());
        let first_ref = match readout {
            Readout::Constant { value } => value,
            _ => first_moment_rhs(&f, &[(x.clone(), 1.0)], t)?,
        };
        rows.push(Row::within_se("particles", "first_moment", &first, first_ref, 0.0, k_se));

        let mc = &ctx.cfg.config.mc;
        let fk_mc = MCConfig::new(mc.paths, mc.path_dt, ctx.seed_for(1))?.with_antithetic(mc.antithetic);
        let fk = second_moment_rhs(&readout, &[(x.clone(), 1.0)], t, &kernel, &fk_mc, &ctx.exec)?.total;

        let delta = p.f64("delta", 1e-3)?;
        let scheme = ctx.cfg.scheme()?;
        let factor = ctx.factor(&kernel, &grid)?;
        let cell = grid.locate(&x)?;
        let spde_root = ctx.seed_for(2);
        let spde_samples = ctx.exec.try_map(replicas, |r| -> Result<f64, CliError> {
            let noise = Noise::new(factor.clone(), scheme.dt, rng::derive_seed(spde_root, &[r as u64]))?;
            let u1 = solve_log_laplace(&f, delta, t, &noise, scheme, &[t])?.last().values()[cell];
            let u2 = solve_log_laplace(&f, 2.0 * delta, t, &noise, scheme, &[t])?.last().values()[cell];
            let v = solve_pam(&f, t, &noise, scheme, &[t])?.last().values()[cell];
            Ok(v * v - (u2 - 2.0 * u1) / (delta * delta))
        })?;
        let spde = Estimate::from_samples(&spde_samples);

        match (kernel.as_constant(), &readout) {
            (Some(c), Readout::Constant { value }) => {
                let growth = if c == 0.0 { 1.0 + t } else { (c * t).exp() + ((c * t).exp() - 1.0) / c };
                let exact = growth * value * value;
                rows.push(Row::within_se("particles", "second_moment", &particles, exact, 0.0, agree_se));
                rows.push(Row::within_se("feynman_kac", "second_moment", &fk, exact, 0.0, k_se));
                rows.push(Row::within_se("spde", "second_moment", &spde, exact, 0.0, agree_se));
            }
            _ => {
                rows.push(Row::estimate("particles", "second_moment", &particles));
                rows.push(Row::estimate("feynman_kac", "second_moment", &fk));
                rows.push(Row::estimate("spde", "second_moment", &spde));
            }
        }
        for (name, a, b) in [
            ("particles-feynman_kac", &particles, &fk),
            ("particles-spde", &particles, &spde),
            ("feynman_kac-spde", &fk, &spde),
        ] {
            rows.push(Row::within_se("triangle", name, a, b.mean, b.se, agree_se));
        }
    }

    if martingale {
        for (i, &s) in save_times.iter().enumerate() {
            let m = Estimate::from_samples(&runs.iter().map(|r| r.1[i].0).collect::<Vec<_>>());
            let m2 = Estimate::from_samples(&runs.iter().map(|r| r.1[i].0.powi(2)).collect::<Vec<_>>());
            let qv = Estimate::from_samples(&runs.iter().map(|r| r.1[i].1).collect::<Vec<_>>());
            rows.push(Row::within_se("martingale", format!("mean:t={s}"), &m, 0.0, 0.0, k_se));
            rows.push(Row::within_se("martingale", format!("square_vs_qv:t={s}"), &m2, qv.mean, qv.se, agree_se));
        }
    }
    Ok(rows)
}
