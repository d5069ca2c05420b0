//! One-dimensional quadrature in `f64`: Gauss–Legendre rules and an
//! adaptive driver, plus a map of the half line onto `[0, 1)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn rule15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

/// Fixed-rule integral of `f` over `[a, b]`.
pub fn fixed(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive bisection on a 15-point Gauss–Legendre rule with an absolute
/// budget of `tol * max(1, |first estimate|)` shared out over subintervals.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let rule = rule15();
    let whole = fixed(&mut f, a, b, rule);
    let mut total = 0.0;
    let budget = tol * whole.abs().max(1.0);
    recurse(&mut f, a, b, whole, budget, budget * 1e-6, 0, rule, &mut total)?;
    if !total.is_finite() {
        return Err(Error::Quadrature("integrand is not finite".into()));
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: usize,
    rule: &(Vec<f64>, Vec<f64>),
    total: &mut f64,
) -> Result<()> {
    const MAX_DEPTH: usize = 48;
    let m = 0.5 * (a + b);
    let left = fixed(f, a, m, rule);
    let right = fixed(f, m, b, rule);
    let err = (left + right - whole).abs();
    if err <= tol.max(floor).max(4.0 * f64::EPSILON * (left.abs() + right.abs())) {
        *total += left + right;
        return Ok(());
    }
    if depth >= MAX_DEPTH || !err.is_finite() {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a:.6e}, {b:.6e}] (local error {err:.3e})"
        )));
    }
    recurse(f, a, m, left, 0.5 * tol, floor, depth + 1, rule, total)?;
    recurse(f, m, b, right, 0.5 * tol, floor, depth + 1, rule, total)
}

/// `∫_a^∞ f(r) dr` through `r = a + s / (1 - s)`.
pub fn adaptive_tail(mut f: impl FnMut(f64) -> f64, a: f64, tol: f64) -> Result<f64> {
    adaptive(
        |s| {
            let one_minus = 1.0 - s;
            let r = a + s / one_minus;
            f(r) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = gauss_legendre(8);
        let v = fixed(&mut |x: f64| x.powi(14) + 3.0 * x.powi(3), -1.0, 1.0, &rule);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let sum_w: f64 = rule.1.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks_and_tails() {
        let v = adaptive(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9);
        let t = adaptive_tail(|r: f64| 1.0 / (1.0 + r * r), 0.0, 1e-12).unwrap();
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn divergent_tail_is_reported() {
        assert!(adaptive_tail(|_| 1.0, 0.0, 1e-10).is_err());
    }
}
