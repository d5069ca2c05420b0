//! Monte Carlo oracles built on Brownian paths: the Feynman–Kac semigroup
//! of a pair, the first and second moment formulas of the superprocess,
//! annealed moments of the scaled model, and Lyapunov and tail probes of
//! the quenched PAM.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::covariance::{CovarianceKernel, GridFactor, ThetaProfile};
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::heatkernel::{GridFunction, HeatSemigroup};
use crate::readout::Readout;
use crate::rng::{self, tag};
use crate::spde::{solve_pam_renormalized, NoisePath, Scheme};
use crate::stats::{quantile, wilson_interval, Estimate};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub antithetic: bool,
}

impl MCConfig {
    pub fn new(paths: usize, dt: f64, seed: u64) -> Result<Self> {
        if paths < 2 {
            return Err(invalid("paths", "need at least two paths for a standard error"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", "must be positive and finite"));
        }
        Ok(MCConfig {
            paths,
            dt,
            seed,
            antithetic: false,
        })
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    /// Steps of size `dt` covering `t`; `t` must be a multiple of `dt`.
    pub fn steps(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return Err(invalid("t", "must be non-negative"));
        }
        let k = (t / self.dt).round();
        if (k * self.dt - t).abs() > 1e-9 * t.max(self.dt) {
            return Err(invalid("dt", "must divide the time horizon"));
        }
        Ok(k as usize)
    }
}

/// Pair functions `F(x, y)`.
pub type PairFn<'a, T> = dyn Fn(&[T], &[T]) -> T + Sync + 'a;

/// Simulated endpoint and integrated potential of one Brownian pair.
struct PairSample {
    end_x: Vec<f64>,
    end_y: Vec<f64>,
    potential: f64,
}

/// Pair `(B, B')` from `(x, y)` over `steps` steps of size `h`, with the
/// left-endpoint Riemann sum of `C(B_s, B'_s)`. `sign` flips the
/// increments for the antithetic partner.
fn pair_path<T: Scalar>(
    kernel: &CovarianceKernel<T>,
    x: &[T],
    y: &[T],
    steps: usize,
    h: f64,
    normals: &[f64],
    sign: f64,
) -> PairSample {
    let d = x.len();
    let mut bx: Vec<T> = x.to_vec();
    let mut by: Vec<T> = y.to_vec();
    let sd = T::lit(sign * h.sqrt());
    let mut potential = 0.0;
    let constant = kernel.as_constant();
    for k in 0..steps {
        potential += match constant {
            Some(c) => c.as_f64(),
            None => kernel.at_r2(crate::dist2(&bx, &by)).as_f64(),
        };
        let z = &normals[2 * d * k..2 * d * (k + 1)];
        for j in 0..d {
            bx[j] = bx[j] + sd * T::lit(z[j]);
            by[j] = by[j] + sd * T::lit(z[d + j]);
        }
    }
    PairSample {
        end_x: bx.iter().map(|v| v.as_f64()).collect(),
        end_y: by.iter().map(|v| v.as_f64()).collect(),
        potential: potential * h,
    }
}

fn normals<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng::normal::<f64, _>(rng)).collect()
}

/// One unbiased sample of `Q_t^C F(x, y)` over `steps` steps of size `h`.
#[allow(clippy::too_many_arguments)]
fn qtc_sample<T: Scalar, R: Rng + ?Sized>(
    f: &PairFn<'_, T>,
    x: &[T],
    y: &[T],
    steps: usize,
    h: f64,
    kernel: &CovarianceKernel<T>,
    antithetic: bool,
    rng: &mut R,
) -> f64 {
    let z = normals(rng, 2 * x.len() * steps);
    let eval = |p: &PairSample| {
        let ex: Vec<T> = p.end_x.iter().map(|&v| T::lit(v)).collect();
        let ey: Vec<T> = p.end_y.iter().map(|&v| T::lit(v)).collect();
        f(&ex, &ey).as_f64() * p.potential.exp()
    };
    let plus = eval(&pair_path(kernel, x, y, steps, h, &z, 1.0));
    if antithetic {
        0.5 * (plus + eval(&pair_path(kernel, x, y, steps, h, &z, -1.0)))
    } else {
        plus
    }
}

fn check_points<T: Scalar>(kernel: &CovarianceKernel<T>, pts: &[&[T]]) -> Result<()> {
    for p in pts {
        if p.len() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: p.len(),
            });
        }
    }
    Ok(())
}

fn finish(samples: Vec<f64>) -> Result<Estimate> {
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: i });
    }
    Ok(Estimate::from_samples(&samples))
}

/// `Q_t^C F(x, y) = E[F(B_t, B'_t) exp(∫_0^t C(B_s, B'_s) ds)]`.
pub fn qtc<T: Scalar>(
    f: &PairFn<'_, T>,
    x: &[T],
    y: &[T],
    t: f64,
    kernel: &CovarianceKernel<T>,
    mc: &MCConfig,
    exec: &Executor,
) -> Result<Estimate> {
    check_points(kernel, &[x, y])?;
    let steps = mc.steps(t)?;
    let samples = exec.map(mc.paths, |i| {
        let mut r = rng::stream(mc.seed, &[tag::PATH, i as u64]);
        qtc_sample(f, x, y, steps, mc.dt, kernel, mc.antithetic, &mut r)
    });
    finish(samples)
}

/// `πF(x) = F(x, x)`.
pub fn pi_diagonal<'a, T: Scalar>(f: &'a PairFn<'a, T>) -> impl Fn(&[T]) -> T + 'a {
    move |x| f(x, x)
}

/// `f ⊗ f`.
pub fn tensor<T: Scalar>(f: &Readout<T>) -> impl Fn(&[T], &[T]) -> T + Sync + '_ {
    move |x, y| f.eval(x) * f.eval(y)
}

/// A finite atomic measure `Σ w_i δ_{x_i}`.
pub type PointMeasure<T> = [(Vec<T>, T)];

/// `⟨P_t f, ν⟩` with the torus semigroup.
pub fn first_moment_rhs<T: Scalar>(f: &GridFunction<T>, nu: &PointMeasure<T>, t: T) -> Result<T> {
    let smoothed = HeatSemigroup::new(*f.torus()).apply(f, t)?;
    nu.iter()
        .map(|(x, w)| smoothed.at(x).map(|v| v * *w))
        .sum::<Result<T>>()
}

/// The two terms of the second moment formula and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    /// `⟨Q_t^C(f⊗f), ν⊗ν⟩`.
    pub pair_term: Estimate,
    /// `⟨∫_0^t P_{t-s} π Q_s^C(f⊗f) ds, ν⟩`.
    pub branching_term: Estimate,
    pub total: Estimate,
}

/// `E_ν⟨f, X_t⟩²`.
///
/// The time integral in the branching term is estimated without
/// discretization bias by drawing the split time `s` uniformly on
/// `[0, t]`: one exact Gaussian step carries the single ancestor from `ν`
/// over `t - s`, then a pair runs for the remaining `s` on a mesh of at
/// most `dt`.
pub fn second_moment_rhs<T: Scalar>(
    f: &Readout<T>,
    nu: &PointMeasure<T>,
    t: f64,
    kernel: &CovarianceKernel<T>,
    mc: &MCConfig,
    exec: &Executor,
) -> Result<SecondMoment> {
    for (x, _) in nu {
        check_points(kernel, &[x])?;
    }
    let steps = mc.steps(t)?;
    let ff = tensor(f);
    let d = kernel.dim();
    let samples = exec.map(mc.paths, |i| {
        let mut pair = 0.0;
        for (a, (xa, wa)) in nu.iter().enumerate() {
            for (b, (xb, wb)) in nu.iter().enumerate() {
                let mut r = rng::stream(mc.seed, &[tag::PATH, i as u64, a as u64, b as u64, 1]);
                pair += wa.as_f64() * wb.as_f64() * qtc_sample(&ff, xa, xb, steps, mc.dt, kernel, mc.antithetic, &mut r);
            }
        }
        let mut branch = 0.0;
        for (a, (xa, wa)) in nu.iter().enumerate() {
            let mut r = rng::stream(mc.seed, &[tag::PATH, i as u64, a as u64, 2]);
            let s = t * rng::uniform(&mut r);
            let sd = (t - s).sqrt();
            let z: Vec<T> = xa
                .iter()
                .map(|&c| c + T::lit(sd * rng::normal::<f64, _>(&mut r)))
                .collect();
            let m = (s / mc.dt).ceil().max(1.0) as usize;
            let h = s / m as f64;
            debug_assert_eq!(z.len(), d);
            branch += wa.as_f64() * t * qtc_sample(&ff, &z, &z, m, h, kernel, mc.antithetic, &mut r);
        }
        (pair, branch)
    });
    let pair: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let branch: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let total: Vec<f64> = samples.iter().map(|s| s.0 + s.1).collect();
    Ok(SecondMoment {
        pair_term: finish(pair)?,
        branching_term: finish(branch)?,
        total: finish(total)?,
    })
}

/// `E[v(t, x) v(t, y)] = Q_t^C(f⊗f)(x, y)` for the PAM started at `f`.
pub fn pam_second_moment_oracle<T: Scalar>(
    f: &Readout<T>,
    t: f64,
    x: &[T],
    y: &[T],
    kernel: &CovarianceKernel<T>,
    mc: &MCConfig,
    exec: &Executor,
) -> Result<Estimate> {
    qtc(&tensor(f), x, y, t, kernel, mc, exec)
}

/// `E[w_a(t, x)^k]` for the scaled model with profile `Θ`.
///
/// Conditional on `k` independent paths `X_i = x + B_i / √a`, the sum of
/// the field integrals is Gaussian with variance
/// `V = Σ_{i,j} ∫_0^t Θ(X_i - X_j) ds`, so each path tuple contributes
/// `exp(V / 2)`. `a = ∞` freezes the paths.
pub fn annealed_moment_w<T: Scalar>(
    a: f64,
    profile: ThetaProfile,
    t: f64,
    x: &[T],
    k: usize,
    mc: &MCConfig,
    exec: &Executor,
) -> Result<Estimate> {
    if !(1..=4).contains(&k) {
        return Err(invalid("k", "moment order must be in 1..=4"));
    }
    if !(a > 0.0) {
        return Err(invalid("a", "must be positive"));
    }
    let steps = mc.steps(t)?;
    let d = x.len();
    let sd = (mc.dt / a).sqrt();
    let samples = exec.map(mc.paths, |i| {
        let mut r = rng::stream(mc.seed, &[tag::PATH, i as u64]);
        let mut pos: Vec<f64> = (0..k).flat_map(|_| x.iter().map(|v| v.as_f64())).collect();
        let mut v = 0.0;
        for _ in 0..steps {
            for p in 0..k {
                for q in 0..k {
                    v += if p == q {
                        1.0
                    } else {
                        profile.at_r2(crate::dist2(&pos[p * d..(p + 1) * d], &pos[q * d..(q + 1) * d]))
                    };
                }
            }
            if sd > 0.0 {
                for c in pos.iter_mut() {
                    *c += sd * rng::normal::<f64, _>(&mut r);
                }
            }
        }
        (0.5 * v * mc.dt).exp()
    });
    finish(samples)
}

/// Quenched growth rates of the Stratonovich PAM for `C = a Θ` from
/// constant initial data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub a: f64,
    /// Per replica: slope of `t ↦ log max ṽ(t)` over `[T/2, T]` divided by
    /// `a` (the growth rate of `w_a`), or the raw slope when `a = 0`.
    pub slopes: Vec<f64>,
    /// Same, over `[T/4, T/2]`.
    pub early_slopes: Vec<f64>,
    /// Per replica: raw slope of `log max v` (Itô solution) over `[T/2, T]`.
    pub ito_slopes: Vec<f64>,
    /// Per replica: raw slope of `log max ṽ` over `[T/2, T]`.
    pub stratonovich_slopes: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub early_median: f64,
    /// Late and early medians agree within the late interquartile range.
    pub plateau: bool,
}

fn unit_theta<T: Scalar>(base: &GridFactor<T>) -> Result<()> {
    match base.kernel().as_scaled_theta() {
        Some((a, _)) if a == T::one() => Ok(()),
        _ => Err(invalid("base", "factor must be of the unit scaled kernel Θ")),
    }
}

/// Replica seed shared by every coupling, so ladders are paired.
fn replica_noise<T: Scalar>(base: &Arc<GridFactor<T>>, a: f64, scheme: &Scheme<T>, seed: u64, r: usize) -> Result<NoisePath<T>> {
    Ok(NoisePath::new(base.clone(), scheme.dt, rng::derive_seed(seed, &[tag::REPLICA, r as u64]))?
        .with_gain(T::lit(a.sqrt())))
}

pub fn lyapunov_estimate<T: Scalar>(
    a: f64,
    base: &Arc<GridFactor<T>>,
    horizon: f64,
    scheme: Scheme<T>,
    replicas: usize,
    seed: u64,
    exec: &Executor,
) -> Result<LyapunovEstimate> {
    unit_theta(base)?;
    if !(a >= 0.0) {
        return Err(invalid("a", "must be non-negative"));
    }
    let steps = scheme.steps(T::lit(horizon))?;
    let first = steps / 4;
    let times: Vec<T> = (first..=steps)
        .map(|k| T::from_count(k) * scheme.dt)
        .collect();
    let torus = *base.torus();
    let init = GridFunction::constant(torus, T::one());
    let per_replica = exec.try_map(replicas, |r| -> Result<(f64, f64, f64)> {
        let noise = replica_noise(base, a, &scheme, seed, r)?;
        let sol = solve_pam_renormalized(&init, T::lit(horizon), &noise, scheme, &times)?;
        let ts: Vec<f64> = sol.times.iter().map(|t| t.as_f64()).collect();
        let logs: Vec<f64> = (0..sol.len()).map(|k| sol.log_max(k).as_f64()).collect();
        let mid = ts.partition_point(|&t| t < 0.5 * horizon);
        let late = crate::stats::ols_slope(&ts[mid..], &logs[mid..]);
        let early = crate::stats::ols_slope(&ts[..=mid], &logs[..=mid]);
        Ok((late, early, a))
    })?;
    let norm = |raw: f64| if a > 0.0 { (raw + 0.5 * a) / a } else { raw };
    let ito_slopes: Vec<f64> = per_replica.iter().map(|p| p.0).collect();
    let stratonovich_slopes: Vec<f64> = ito_slopes.iter().map(|s| s + 0.5 * a).collect();
    let slopes: Vec<f64> = ito_slopes.iter().map(|&s| norm(s)).collect();
    let early_slopes: Vec<f64> = per_replica.iter().map(|p| norm(p.1)).collect();
    let median = quantile(&slopes, 0.5);
    let q1 = quantile(&slopes, 0.25);
    let q3 = quantile(&slopes, 0.75);
    let early_median = quantile(&early_slopes, 0.5);
    Ok(LyapunovEstimate {
        a,
        plateau: (median - early_median).abs() <= (q3 - q1),
        slopes,
        early_slopes,
        ito_slopes,
        stratonovich_slopes,
        median,
        q1,
        q3,
        early_median,
    })
}

/// Empirical probability of `sup_{|x|_∞ ≤ radius} v(t, x) > e^{-a t / 3}`
/// for the Itô PAM from constant data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailProbe {
    pub a: f64,
    pub t: f64,
    pub successes: usize,
    pub trials: usize,
    pub probability: f64,
    pub wilson: (f64, f64),
}

#[allow(clippy::too_many_arguments)]
pub fn ldp_tail_probe<T: Scalar>(
    a: f64,
    base: &Arc<GridFactor<T>>,
    t: f64,
    radius: f64,
    scheme: Scheme<T>,
    replicas: usize,
    seed: u64,
    exec: &Executor,
) -> Result<TailProbe> {
    unit_theta(base)?;
    if !(a > 0.0) {
        return Err(invalid("a", "the tail event is degenerate at a = 0"));
    }
    let torus = *base.torus();
    if 2.0 * radius > torus.extent().as_f64() {
        return Err(invalid("radius", "box must have extent at least twice the probe radius"));
    }
    let init = GridFunction::constant(torus, T::one());
    let hits = exec.try_map(replicas, |r| -> Result<bool> {
        let noise = replica_noise(base, a, &scheme, seed, r)?;
        let sol = solve_pam_renormalized(&init, T::lit(t), &noise, scheme, &[T::lit(t)])?;
        Ok(sol.log_max_within(0, T::lit(radius)).as_f64() > -a * t / 3.0)
    })?;
    let successes = hits.iter().filter(|&&h| h).count();
    Ok(TailProbe {
        a,
        t,
        successes,
        trials: replicas,
        probability: successes as f64 / replicas as f64,
        wilson: wilson_interval(successes, replicas),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec() -> Executor {
        Executor::sequential()
    }

    #[test]
    fn free_pair_with_unit_function_is_exactly_one() {
        let k = CovarianceKernel::constant(1, 0.0).unwrap();
        let mc = MCConfig::new(50, 0.01, 1).unwrap();
        let one = |_: &[f64], _: &[f64]| 1.0;
        let e = qtc(&one, &[0.0], &[1.0], 1.0, &k, &mc, &exec()).unwrap();
        assert_eq!((e.mean, e.se), (1.0, 0.0));
    }

    #[test]
    fn constant_potential_is_deterministic() {
        let k = CovarianceKernel::constant(2, 0.7).unwrap();
        let mc = MCConfig::new(20, 0.01, 1).unwrap();
        let one = |_: &[f64], _: &[f64]| 1.0;
        let e = qtc(&one, &[0.0, 0.0], &[1.0, 0.0], 1.0, &k, &mc, &exec()).unwrap();
        assert!((e.mean - 0.7f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_of_kernel_is_coupling() {
        let k = CovarianceKernel::scaled_theta(2, 3.0, ThetaProfile::Gaussian).unwrap();
        let c = |x: &[f64], y: &[f64]| k.eval(x, y).unwrap();
        let pi = pi_diagonal(&c);
        assert_eq!(pi(&[0.4, 2.0]), 3.0);
    }

    #[test]
    fn first_annealed_moment_is_exact() {
        let mc = MCConfig::new(10, 0.01, 3).unwrap();
        let e = annealed_moment_w(2.0, ThetaProfile::Gaussian, 1.0, &[0.0], 1, &mc, &exec()).unwrap();
        assert!((e.mean - 0.5f64.exp()).abs() < 1e-12);
        assert!(annealed_moment_w(2.0, ThetaProfile::Gaussian, 1.0, &[0.0], 5, &mc, &exec()).is_err());
    }

    #[test]
    fn flat_profile_and_frozen_paths() {
        let mc = MCConfig::new(10, 0.01, 3).unwrap();
        let flat = annealed_moment_w(1.0, ThetaProfile::Flat, 1.0, &[0.0], 2, &mc, &exec()).unwrap();
        assert!((flat.mean - 2f64.exp()).abs() < 1e-10);
        let frozen = annealed_moment_w(f64::INFINITY, ThetaProfile::Gaussian, 0.5, &[0.0], 3, &mc, &exec()).unwrap();
        assert!((frozen.mean - (9.0 * 0.5 / 2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn dt_must_divide_horizon() {
        let mc = MCConfig::new(10, 0.3, 3).unwrap();
        assert!(mc.steps(1.0).is_err());
        assert!(MCConfig::new(1, 0.1, 0).is_err());
    }
}
