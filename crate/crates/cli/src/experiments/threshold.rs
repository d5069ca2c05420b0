use std::f64::consts::PI;

use sbmre_core::covariance::CovarianceKernel;
use sbmre_core::heatkernel::{classify_regime, persistence_threshold, theta_potential};

use super::{regime_rows, Context};
use crate::report::Row;
use crate::CliError;

fn closed_form(d: usize) -> Option<f64> {
    match d {
        3 => Some(PI / 3.0),
        4 => Some(PI * PI / 4.0),
        5 => Some(3.0 * PI * PI / 10.0),
        _ => None,
    }
}

pub fn run(ctx: &Context) -> Result<Vec<Row>, CliError> {
    let p = ctx.cfg.params();
    let mut rows = Vec::new();
    for d in p.usizes("dims", &[3, 4, 5])? {
        let v = persistence_threshold(d)?;
        let name = format!("d={d}");
        rows.push(match closed_form(d) {
            Some(c) => Row::close("threshold", name, v, c, 1e-12),
            None => Row::info("threshold", name, v),
        });
    }
    let ball = CovarianceKernel::indicator_ball(3, 1.0, 1.0)?;
    rows.push(Row::close("theta", "unit_ball:d=3", theta_potential(&ball, 3)?, 2.0 * PI, 1e-6));
    let kernel = ctx.cfg.kernel()?;
    if kernel.dim() >= 3 {
        rows.extend(regime_rows("regime", "kernel", &classify_regime(&kernel)?));
    }
    Ok(rows)
}
