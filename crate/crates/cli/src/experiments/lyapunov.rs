use sbmre_core::covariance::CovarianceKernel;
use sbmre_core::feynmankac::{ldp_tail_probe, lyapunov_estimate, TailProbe};
use sbmre_core::spde::Scheme;

use super::Context;
use crate::report::Row;
use crate::CliError;

/// Growth rates and tail probabilities of the PAM with kernel `a Θ` along
/// ladders of the coupling `a` and the time `t`.
pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let kernel = ctx.cfg.kernel()?;
    let (_, profile) = kernel
        .as_scaled_theta()
        .ok_or_else(|| CliError::Config("lyapunov-ladder needs a scaled_theta kernel".into()))?;
    let grid = ctx.cfg.grid()?;
    let base = ctx.factor(&CovarianceKernel::scaled_theta(grid.dim(), 1.0, profile)?, &grid)?;
    let scheme = ctx.cfg.scheme()?;
    let mut rows = Vec::new();

    let ladder = p.f64s("ladder", &[1.0, 4.0, 16.0, 64.0])?;
    let horizon = p.f64("horizon", 4.0)?;
    let replicas = ctx.cfg.config.mc.replicas;
    let mut estimates = Vec::new();
    for &a in &ladder {
        let est = lyapunov_estimate(a, &base, horizon, scheme, replicas, ctx.seed_for(0), &ctx.exec)?;
        rows.push(Row::info("lyapunov", format!("median:a={a}"), est.median));
        rows.push(Row::info("lyapunov", format!("q1:a={a}"), est.q1));
        rows.push(Row::info("lyapunov", format!("q3:a={a}"), est.q3));
        rows.push(Row::info("lyapunov", format!("early_median:a={a}"), est.early_median));
        rows.push(Row::info("lyapunov", format!("plateau:a={a}"), if est.plateau { 1.0 } else { 0.0 }));
        let identity = est
            .ito_slopes
            .iter()
            .zip(&est.stratonovich_slopes)
            .map(|(i, s)| (s - i - 0.5 * a).abs())
            .fold(0.0, f64::max);
        rows.push(Row::at_most("identity", format!("a={a}"), identity, 1e-9 * a.max(1.0)));
        estimates.push(est);
    }
    if let (Some(first), Some(last)) = (estimates.first(), estimates.last()) {
        if estimates.len() > 1 {
            let down = first.slopes.iter().zip(&last.slopes).filter(|(f, l)| l < f).count();
            let frac = down as f64 / replicas as f64;
            let need = p.f64("paired_fraction", 0.9)?;
            rows.push(Row {
                reference: Some(need),
                ..Row::flag("paired", format!("decrease:a={}->{}", first.a, last.a), frac, frac >= need)
            });
        }
    }

    let radius = p.f64("radius", 2.0)?;
    let ldp_scheme = Scheme::new(p.f64("ldp_dt", scheme.dt)?, scheme.ordering)?;
    let ldp_replicas = p.usize("ldp_replicas", 100)?;
    let ldp_t = p.f64("ldp_t", 4.0)?;
    let mut by_a = Vec::new();
    for a in p.f64s("ldp_a", &[1.0, 16.0, 64.0, 256.0])? {
        by_a.push(ldp_tail_probe(a, &base, ldp_t, radius, ldp_scheme, ldp_replicas, ctx.seed_for(1), &ctx.exec)?);
    }
    rows.extend(ladder_rows("ldp_a", &by_a, |pr| format!("a={}:t={}", pr.a, pr.t)));
    let ldp_fixed_a = p.f64("ldp_fixed_a", 256.0)?;
    let mut by_t = Vec::new();
    for t in p.f64s("ldp_times", &[0.5, 1.0, 2.0, 4.0])? {
        by_t.push(ldp_tail_probe(ldp_fixed_a, &base, t, radius, ldp_scheme, ldp_replicas, ctx.seed_for(2), &ctx.exec)?);
    }
    rows.extend(ladder_rows("ldp_t", &by_t, |pr| format!("a={}:t={}", pr.a, pr.t)));
    Ok(rows)
}

/// Probabilities with Wilson intervals, a monotonicity check and an
/// endpoint separation check.
fn ladder_rows(record: &str, probes: &[TailProbe], label: impl Fn(&TailProbe) -> String) -> Vec<Row> {
    let mut rows = Vec::new();
    for pr in probes {
        rows.push(Row::info(record, format!("p:{}", label(pr)), pr.probability));
        rows.push(Row::info(record, format!("wilson_lo:{}", label(pr)), pr.wilson.0));
        rows.push(Row::info(record, format!("wilson_hi:{}", label(pr)), pr.wilson.1));
    }
    if let (Some(first), Some(last)) = (probes.first(), probes.last()) {
        let rises = probes
            .windows(2)
            .map(|w| w[1].probability - w[0].probability)
            .fold(0.0, f64::max);
        rows.push(Row::at_most(record, "max_increase", rises, 0.0));
        rows.push(Row {
            reference: Some(last.wilson.1),
            ..Row::flag(record, "separation", first.wilson.0, first.wilson.0 > last.wilson.1)
        });
    }
    rows
}
