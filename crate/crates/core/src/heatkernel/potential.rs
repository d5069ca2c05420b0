//! Green-weighted potentials of a radial correlation profile: the θ
//! constant of the persistence condition, the bridge potential behind the
//! 3G bound, the Khasminskii factor and the regime classifier.

use serde::Serialize;

use super::quadrature::{adaptive, adaptive_tail, gauss_legendre};
use super::{green_constant, persistence_threshold, sphere_area};
use crate::covariance::CovarianceKernel;
use crate::error::{invalid, Error, Result};
use crate::Scalar;

const TOL: f64 = 1e-10;

/// A non-negative function of `|x|`.
pub trait Radial<T> {
    fn at(&self, r: T) -> T;

    /// Radii where the profile may jump or kink.
    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }

    /// Radius beyond which the profile vanishes, if any.
    fn support(&self) -> Option<T> {
        None
    }

    fn non_increasing(&self) -> bool {
        false
    }
}

/// Closure-backed [`Radial`].
pub struct RadialFn<T, F> {
    f: F,
    breaks: Vec<T>,
    support: Option<T>,
    non_increasing: bool,
}

impl<T: Scalar, F: Fn(T) -> T> RadialFn<T, F> {
    pub fn new(f: F) -> Self {
        RadialFn {
            f,
            breaks: Vec::new(),
            support: None,
            non_increasing: false,
        }
    }

    pub fn with_breakpoints(mut self, breaks: Vec<T>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn with_support(mut self, r: T) -> Self {
        self.support = Some(r);
        self
    }

    pub fn non_increasing(mut self) -> Self {
        self.non_increasing = true;
        self
    }
}

impl<T: Scalar, F: Fn(T) -> T> Radial<T> for RadialFn<T, F> {
    fn at(&self, r: T) -> T {
        (self.f)(r)
    }
    fn breakpoints(&self) -> Vec<T> {
        self.breaks.clone()
    }
    fn support(&self) -> Option<T> {
        self.support
    }
    fn non_increasing(&self) -> bool {
        self.non_increasing
    }
}

/// `∫_lo^hi h(r) dr`, split at breakpoints, `hi = None` meaning infinity.
fn radial_integral(
    h: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: Option<f64>,
    breaks: &[f64],
    support: Option<f64>,
) -> Result<f64> {
    let upper = match (hi, support) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    if let Some(u) = upper {
        if u <= lo {
            return Ok(0.0);
        }
    }
    let mut knots = vec![lo];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > lo && upper.is_none_or(|u| b < u))
        .collect();
    inner.sort_by(f64::total_cmp);
    knots.extend(inner);
    if let Some(u) = upper {
        knots.push(u);
    }
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += adaptive(h, w[0], w[1], TOL)?;
    }
    if upper.is_none() {
        let last = *knots.last().expect("non-empty");
        total += adaptive_tail(h, last, TOL)?;
    }
    Ok(total)
}

fn radial_parts<T: Scalar>(g: &impl Radial<T>) -> (impl Fn(f64) -> f64 + '_, Vec<f64>, Option<f64>) {
    let breaks = g.breakpoints().into_iter().map(|b| b.as_f64()).collect();
    let support = g.support().map(|s| s.as_f64());
    (move |r: f64| g.at(T::lit(r)).as_f64(), breaks, support)
}

/// `∫ |x - y|^{2-d} g(|y|) dy` at a point with `|x| = rho`, through the
/// shell theorem.
pub fn theta_potential_at<T: Scalar>(g: &impl Radial<T>, d: usize, rho: T) -> Result<T> {
    if d < 3 {
        return Err(invalid("d", "the potential is finite only for d >= 3"));
    }
    let rho = rho.as_f64().abs();
    let (gf, breaks, support) = radial_parts(g);
    let inside = if rho > 0.0 {
        let h = |r: f64| gf(r) * r.powi(d as i32 - 1);
        rho.powi(2 - d as i32) * radial_integral(&h, 0.0, Some(rho), &breaks, support)?
    } else {
        0.0
    };
    let h = |r: f64| gf(r) * r;
    let outside = radial_integral(&h, rho, None, &breaks, support)?;
    Ok(T::lit(sphere_area(d) * (inside + outside)))
}

/// `θ = sup_x ∫ |x - y|^{2-d} g(y) dy`.
///
/// For non-increasing profiles the supremum sits at the origin. Otherwise
/// `|x|` is scanned on a lattice and the best cell refined by golden
/// section.
pub fn theta_potential<T: Scalar>(g: &impl Radial<T>, d: usize) -> Result<T> {
    if g.non_increasing() {
        return theta_potential_at(g, d, T::zero());
    }
    let reach = g
        .breakpoints()
        .into_iter()
        .chain(g.support())
        .map(|b| b.as_f64())
        .fold(1.0, f64::max)
        * 4.0;
    let n = 64;
    let step = reach / n as f64;
    let eval = |rho: f64| theta_potential_at(g, d, T::lit(rho)).map(|v| v.as_f64());
    let mut best = (0.0, eval(0.0)?);
    for i in 1..=n {
        let rho = i as f64 * step;
        let v = eval(rho)?;
        if v > best.1 {
            best = (rho, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(0.0), best.0 + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let c = b - phi * (b - a);
        let e = a + phi * (b - a);
        if eval(c)? >= eval(e)? {
            b = e;
        } else {
            a = c;
        }
    }
    let refined = eval(0.5 * (a + b))?;
    Ok(T::lit(best.1.max(refined)))
}

/// `sup_x ∫ G(x, z) g(z) dz`.
pub fn sup_potential<T: Scalar>(g: &impl Radial<T>, d: usize) -> Result<T> {
    Ok(T::lit(green_constant(d)) * theta_potential(g, d)?)
}

/// Khasminskii factor `1 / (1 - s)` for a supremum potential `s < 1`.
pub fn khasminskii_bound<T: Scalar>(s: T) -> Result<T> {
    if !(s >= T::zero()) {
        return Err(invalid("s", "must be non-negative"));
    }
    if s >= T::one() {
        return Err(Error::RegimeViolation {
            potential: s.as_f64(),
        });
    }
    Ok(T::one() / (T::one() - s))
}

/// Directions on the unit sphere of `R^d` with quadrature weights summing
/// to the sphere area; the polar axis is `axis`.
/// The first polar angle is split at `cuts` (angles in `(0, π)`).
fn sphere_rule(d: usize, axis: &[f64], n: usize, cuts: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let (gx, gw) = gauss_legendre(n);
    let panel = |a: f64, b: f64| -> Vec<(f64, f64)> {
        gx.iter()
            .zip(&gw)
            .map(|(&x, &w)| (a + 0.5 * (b - a) * (x + 1.0), 0.5 * (b - a) * w))
            .collect()
    };
    let polar = panel(0.0, std::f64::consts::PI);
    let mut edges = vec![0.0];
    edges.extend(cuts.iter().copied().filter(|&c| c > 0.0 && c < std::f64::consts::PI));
    edges.push(std::f64::consts::PI);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let first: Vec<(f64, f64)> = edges.windows(2).flat_map(|e| panel(e[0], e[1])).collect();
    let m = 2 * n;
    let azimuth: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
            (phi, 2.0 * std::f64::consts::PI / m as f64)
        })
        .collect();
    let frame = orthonormal_frame(axis);
    // Local coordinates: ω_1 = cos φ_1, ω_2 = sin φ_1 cos φ_2, ...
    let mut partial: Vec<(Vec<f64>, f64, f64)> = vec![(Vec::new(), 1.0, 1.0)];
    for k in 0..d - 1 {
        let nodes = if k + 2 == d {
            &azimuth
        } else if k == 0 {
            &first
        } else {
            &polar
        };
        let power = (d - 2 - k) as i32;
        let mut next = Vec::with_capacity(partial.len() * nodes.len());
        for (coords, sin_prod, w) in &partial {
            for &(phi, wphi) in nodes {
                let mut c = coords.clone();
                c.push(sin_prod * phi.cos());
                next.push((c, sin_prod * phi.sin(), w * wphi * phi.sin().powi(power)));
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|(mut coords, sin_prod, w)| {
            coords.push(sin_prod);
            let world = (0..d)
                .map(|j| coords.iter().zip(&frame).map(|(c, e)| c * e[j]).sum())
                .collect();
            (world, w)
        })
        .collect()
}

fn orthonormal_frame(axis: &[f64]) -> Vec<Vec<f64>> {
    let d = axis.len();
    let mut frame: Vec<Vec<f64>> = vec![axis.to_vec()];
    for j in 0..d {
        if frame.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[j] = 1.0;
        for e in &frame {
            let dot: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            frame.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    frame
}

/// Positive roots `r` of `|x + r ω| = b`.
fn sphere_crossings(x: &[f64], omega: &[f64], b: f64) -> Vec<f64> {
    let xo: f64 = x.iter().zip(omega).map(|(a, w)| a * w).sum();
    let xx: f64 = x.iter().map(|a| a * a).sum();
    let disc = xo * xo - (xx - b * b);
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    [-xo - s, -xo + s].into_iter().filter(|&r| r > 0.0).collect()
}

/// Half of the bridge integral: the part weighted towards `x`, in
/// spherical coordinates about `x`.
fn bridge_half(x: &[f64], y: &[f64], g: &dyn Fn(f64) -> f64, breaks: &[f64], support: Option<f64>, n: usize) -> Result<f64> {
    let d = x.len();
    let p = (d - 2) as i32;
    // Polar axis towards the kernel centre, so every breakpoint sphere the
    // point lies outside of is seen under a cone about the axis.
    let xn = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (axis, cuts): (Vec<f64>, Vec<f64>) = if xn > 0.0 {
        let cuts = breaks
            .iter()
            .copied()
            .chain(support)
            .filter(|&b| b < xn)
            .map(|b| (b / xn).asin())
            .collect();
        (x.iter().map(|a| -a / xn).collect(), cuts)
    } else {
        let sep: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let dist = sep.iter().map(|a| a * a).sum::<f64>().sqrt();
        (sep.iter().map(|a| a / dist).collect(), Vec::new())
    };
    let mut total = 0.0;
    for (omega, w) in sphere_rule(d, &axis, n, &cuts) {
        let h = |r: f64| {
            let mut z2 = 0.0;
            let mut zy2 = 0.0;
            for k in 0..d {
                let z = x[k] + r * omega[k];
                z2 += z * z;
                zy2 += (z - y[k]) * (z - y[k]);
            }
            g(z2.sqrt()) * r / (r.powi(p) + zy2.sqrt().powi(p))
        };
        let mut ray_breaks: Vec<f64> = breaks
            .iter()
            .flat_map(|&b| sphere_crossings(x, &omega, b))
            .collect();
        let mut ray_support = None;
        if let Some(s) = support {
            let roots = sphere_crossings(x, &omega, s);
            let inside = x.iter().map(|a| a * a).sum::<f64>() < s * s;
            match (inside, roots.as_slice()) {
                (true, [.., last]) => ray_support = Some(*last),
                (false, [enter, exit]) => {
                    ray_breaks.push(*enter);
                    ray_support = Some(*exit);
                }
                _ => ray_support = Some(0.0),
            }
        }
        total += w * radial_integral(&h, 0.0, None, &ray_breaks, ray_support)?;
    }
    Ok(total)
}

/// `∫ G(x, z) G(z, y) / G(x, y) g(z) dz`.
///
/// The integrand is split by the partition of unity
/// `|y - z|^{d-2} / (|x - z|^{d-2} + |y - z|^{d-2})` and its complement,
/// and each piece is integrated in spherical coordinates about the
/// singular point it carries, where the Green singularity cancels against
/// the volume element.
pub fn bridge_potential<T: Scalar>(x: &[T], y: &[T], g: &impl Radial<T>) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let d = x.len();
    if d < 3 {
        return Err(invalid("d", "the bridge potential needs d >= 3"));
    }
    if crate::dist2(x, y) == T::zero() {
        return Err(Error::Singular("bridge potential at x = y"));
    }
    let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let yf: Vec<f64> = y.iter().map(|v| v.as_f64()).collect();
    let (gf, breaks, support) = radial_parts(g);
    if support == Some(0.0) {
        return Ok(T::zero());
    }
    let n = if d == 3 { 32 } else { 16 };
    let dist = crate::dist2(&xf, &yf).sqrt();
    let near_x = bridge_half(&xf, &yf, &gf, &breaks, support, n)?;
    let near_y = bridge_half(&yf, &xf, &gf, &breaks, support, n)?;
    Ok(T::lit(green_constant(d) * dist.powi(d as i32 - 2) * (near_x + near_y)))
}

pub const EXTINCTION_CAVEAT: &str = "requires a >= N_0, N_0 unknown";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Regime {
    /// `θ` is below the threshold; `gap = θ - threshold < 0`.
    PersistenceSufficient { theta: f64, threshold: f64, gap: f64 },
    /// Scaled kernel; local extinction holds for large enough coupling.
    ExtinctionSufficient { caveat: &'static str },
    Inconclusive { reason: String, gap: Option<f64> },
}

/// Which of the persistence or extinction theorems applies to `kernel`.
pub fn classify_regime<T: Scalar>(kernel: &CovarianceKernel<T>) -> Result<Regime> {
    let d = kernel.dim();
    let scaled = kernel.as_scaled_theta().is_some();
    let mut gap = None;
    let mut reason = if d >= 3 {
        let threshold = persistence_threshold(d)?;
        match theta_potential(kernel, d) {
            Ok(theta) => {
                let theta = theta.as_f64();
                let g = theta - threshold;
                if g < 0.0 {
                    return Ok(Regime::PersistenceSufficient {
                        theta,
                        threshold,
                        gap: g,
                    });
                }
                gap = Some(g);
                format!("theta {theta:.6e} is not below the threshold {threshold:.6e}")
            }
            Err(Error::Quadrature(_)) => "theta potential diverges".to_string(),
            Err(e) => return Err(e),
        }
    } else {
        format!("persistence criterion needs d >= 3 (d = {d})")
    };
    if scaled {
        return Ok(Regime::ExtinctionSufficient {
            caveat: EXTINCTION_CAVEAT,
        });
    }
    if reason.is_empty() {
        reason = "no criterion applies".into();
    }
    Ok(Regime::Inconclusive { reason, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_ball() -> impl Radial<f64> {
        RadialFn::new(|r: f64| if r <= 1.0 { 1.0 } else { 0.0 })
            .with_breakpoints(vec![1.0])
            .with_support(1.0)
            .non_increasing()
    }

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        for d in 3..=4 {
            let total: f64 = sphere_rule(d, &[1.0, 0.0, 0.0, 0.0][..d], 12, &[0.4])
                .iter()
                .map(|r| r.1)
                .sum();
            assert!((total - sphere_area(d)).abs() < 1e-10, "d = {d}");
        }
    }

    #[test]
    fn theta_of_unit_ball() {
        let t: f64 = theta_potential(&unit_ball(), 3).unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn theta_of_zero_is_zero() {
        let g = RadialFn::new(|_: f64| 0.0).with_support(0.0).non_increasing();
        assert_eq!(theta_potential(&g, 3).unwrap(), 0.0);
    }

    #[test]
    fn power_profile_closed_form() {
        // 4π ε ∫ r / (1 + r³) dr = 4π ε · 2π / (3√3).
        let eps = 0.1;
        let k = CovarianceKernel::stationary_power(3, eps, 3.0).unwrap();
        let t: f64 = theta_potential(&k, 3).unwrap();
        let exact = 8.0 * PI * PI * eps / (3.0 * 3f64.sqrt());
        assert!((t - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn non_monotone_profile_peaks_off_origin() {
        // A shell: the potential is flat inside the shell and decays outside.
        let g = RadialFn::new(|r: f64| if (2.0..=3.0).contains(&r) { 1.0 } else { 0.0 })
            .with_breakpoints(vec![2.0, 3.0])
            .with_support(3.0);
        let sup: f64 = theta_potential(&g, 3).unwrap();
        let origin: f64 = theta_potential_at(&g, 3, 0.0).unwrap();
        assert!(sup >= origin - 1e-9);
        assert!((origin - 4.0 * PI * 2.5).abs() < 1e-9);
    }

    #[test]
    fn khasminskii() {
        assert_eq!(khasminskii_bound(0.0).unwrap(), 1.0);
        assert_eq!(khasminskii_bound(0.5).unwrap(), 2.0);
        assert!(matches!(khasminskii_bound(1.0), Err(Error::RegimeViolation { .. })));
    }

    #[test]
    fn bridge_is_symmetric_and_bounded() {
        let g = unit_ball();
        let x = [0.0, 0.0, 0.0];
        let y = [2.0, 0.0, 0.0];
        let a: f64 = bridge_potential(&x, &y, &g).unwrap();
        let b: f64 = bridge_potential(&y, &x, &g).unwrap();
        assert_eq!(a, b);
        let bound = 2.0 * sup_potential(&g, 3).unwrap();
        assert!(a > 0.0 && a <= bound);
        assert!(bridge_potential(&x, &x, &g).is_err());
    }

    #[test]
    fn regimes() {
        let weak = CovarianceKernel::stationary_power(3, 0.05, 3.0).unwrap();
        assert!(matches!(classify_regime(&weak).unwrap(), Regime::PersistenceSufficient { .. }));
        let planar = CovarianceKernel::stationary_power(2, 0.05, 3.0).unwrap();
        assert!(matches!(classify_regime(&planar).unwrap(), Regime::Inconclusive { .. }));
        let strong = CovarianceKernel::scaled_theta(3, 50.0, crate::covariance::ThetaProfile::Gaussian).unwrap();
        assert_eq!(
            classify_regime(&strong).unwrap(),
            Regime::ExtinctionSufficient { caveat: EXTINCTION_CAVEAT }
        );
        let flat = CovarianceKernel::constant(3, 1.0).unwrap();
        assert!(matches!(classify_regime(&flat).unwrap(), Regime::Inconclusive { gap: None, .. }));
    }
}
