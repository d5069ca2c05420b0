//! Polynomial weights `φ_ρ(x) = (1 + |x|²)^{-ρ/2}` and the empirical
//! constant in `P_t φ_ρ ≤ C φ_ρ`.

use serde::Serialize;

use super::grid::{GridFunction, Torus};
use super::semigroup::HeatSemigroup;
use crate::error::{invalid, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightFamily<T> {
    rho: T,
}

impl<T: Scalar> WeightFamily<T> {
    pub fn new(rho: T) -> Result<Self> {
        if !(rho > T::zero()) {
            return Err(invalid("rho", "must be positive"));
        }
        Ok(WeightFamily { rho })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn at(&self, x: &[T]) -> T {
        (T::one() + crate::norm2(x)).powf(-self.rho / T::lit(2.0))
    }

    pub fn on(&self, torus: Torus<T>) -> GridFunction<T> {
        GridFunction::from_fn(torus, |x| self.at(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub rho: f64,
    pub dim: usize,
    pub t_max: f64,
    /// Largest observed `P_t φ_ρ(x) / φ_ρ(x)`.
    pub constant: f64,
    pub argmax_radius: f64,
    pub argmax_t: f64,
    /// Ratio at the origin for the smallest scanned time.
    pub ratio_at_origin_small_t: f64,
    pub finite: bool,
}

/// Scans `t ∈ (0, t_max]` on a truncated lattice and reports the smallest
/// `C` with `P_t φ_ρ ≤ C φ_ρ` on the inner half of the box (the outer half
/// is contaminated by periodization).
pub fn check_weight_domination(rho: f64, dim: usize, t_max: f64) -> Result<DominationReport> {
    if !(t_max > 0.0) {
        return Err(invalid("t_max", "must be positive"));
    }
    let (cells, extent) = match dim {
        1 => (1024, 128.0),
        2 => (128, 48.0),
        3 => (48, 32.0),
        _ => return Err(invalid("dim", "must be 1, 2 or 3")),
    };
    let extent = f64::max(extent, 16.0 * t_max.sqrt() + 4.0);
    let torus = Torus::new(dim, cells, extent)?;
    let weight = WeightFamily::new(rho)?;
    let phi = weight.on(torus);
    let semigroup = HeatSemigroup::new(torus);
    let inner = extent / 4.0;
    let steps = 16;
    let mut report = DominationReport {
        rho,
        dim,
        t_max,
        constant: 0.0,
        argmax_radius: 0.0,
        argmax_t: 0.0,
        ratio_at_origin_small_t: f64::NAN,
        finite: true,
    };
    let origin = torus.locate(&vec![0.0; dim])?;
    for k in 1..=steps {
        let t = t_max * k as f64 / steps as f64;
        let smoothed = semigroup.apply(&phi, t)?;
        for i in 0..torus.len() {
            let x = torus.point(i);
            if x.iter().any(|c| c.abs() > inner) {
                continue;
            }
            let ratio = smoothed.values()[i] / phi.values()[i];
            if !ratio.is_finite() {
                report.finite = false;
            }
            if ratio > report.constant {
                report.constant = ratio;
                report.argmax_radius = crate::norm2(&x).sqrt();
                report.argmax_t = t;
            }
        }
        if k == 1 {
            report.ratio_at_origin_small_t = smoothed.values()[origin] / phi.values()[origin];
        }
    }
    report.finite &= report.constant.is_finite();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_basics() {
        let w = WeightFamily::new(2.0).unwrap();
        assert_eq!(w.at(&[0.0, 0.0]), 1.0);
        assert!(w.at(&[1.0]) < 1.0 && w.at(&[2.0]) < w.at(&[1.0]));
    }

    #[test]
    fn domination_constant_is_finite_and_at_least_one() {
        let r = check_weight_domination(2.0, 1, 1.0).unwrap();
        assert!(r.finite);
        assert!(r.constant >= 1.0);
        assert!(r.ratio_at_origin_small_t <= 1.0);
    }

    #[test]
    fn small_horizon_ratio_tends_to_one() {
        let r = check_weight_domination(2.0, 1, 1e-4).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-3);
    }
}
