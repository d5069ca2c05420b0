//! Deterministic analysis: heat kernel and semigroup, Green function,
//! persistence threshold, potential quadratures and weight bounds.

mod grid;
mod potential;
pub mod quadrature;
mod semigroup;
mod weight;

pub use grid::{GridFunction, Torus};
pub use potential::{
    bridge_potential, classify_regime, khasminskii_bound, sup_potential, theta_potential,
    theta_potential_at, Radial, RadialFn, Regime, EXTINCTION_CAVEAT,
};
pub use semigroup::{apply_heat_semigroup, HeatMultiplier, HeatScratch, HeatSemigroup};
pub use weight::{check_weight_domination, DominationReport, WeightFamily};

use crate::error::{invalid, Error, Result};
use crate::Scalar;

/// `Γ(k / 2)` for a positive integer `k`, exact up to rounding.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "gamma_half needs k > 0");
    let (mut g, mut s) = if k % 2 == 0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while 2.0 * s < k as f64 {
        g *= s;
        s += 1.0;
    }
    g
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Gaussian density with variance `t` per axis.
pub fn heat_kernel<T: Scalar>(t: T, x: &[T]) -> Result<T> {
    if !(t > T::zero()) {
        return Err(invalid("t", "must be positive"));
    }
    let d = T::from_count(x.len());
    let two_pi_t = T::lit(2.0) * T::PI() * t;
    Ok(two_pi_t.powf(-d / T::lit(2.0)) * (-crate::norm2(x) / (T::lit(2.0) * t)).exp())
}

/// Normalizing constant `Γ(d/2 - 1) / (4 π^{d/2})` of the Green function.
pub fn green_constant(d: usize) -> f64 {
    gamma_half(d - 2) / (4.0 * std::f64::consts::PI.powf(d as f64 / 2.0))
}

/// `G(x, y) = ∫_0^∞ p(2t, x - y) dt`.
pub fn green<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let d = x.len();
    if d < 3 {
        return Err(invalid("d", "the Green function is finite only for d >= 3"));
    }
    let r2 = crate::dist2(x, y);
    if r2 == T::zero() {
        return Err(Error::Singular("green at x = y"));
    }
    let r = r2.as_f64().sqrt();
    Ok(T::lit(green_constant(d) * r.powi(2 - d as i32)))
}

/// Right-hand side `8 (d-2) π^{d/2} / (d 2^d Γ(d/2 - 1))` of the
/// persistence condition.
pub fn persistence_threshold(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(invalid("d", "threshold is defined for d >= 3"));
    }
    let df = d as f64;
    Ok(8.0 * (df - 2.0) * std::f64::consts::PI.powf(df / 2.0)
        / (df * 2f64.powi(d as i32) * gamma_half(d - 2)))
}
