//! The function-valued dual process: noise-free absorption `½ΔY - ½Y²`
//! between the arrivals of a rate-`n` Poisson clock, and at each arrival a
//! multiplicative kick `Y ← Y (1 + h/√n)` by an independent field sample
//! `h` clipped to `±√n`.

use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::covariance::GridFactor;
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::heatkernel::{GridFunction, WeightFamily};
use crate::rng::{self, tag, StreamRng};
use crate::spde::{solve_log_laplace, AbsorbingFlow, NoisePath, Scheme};
use crate::stats::Estimate;
use crate::Scalar;

/// Arrival time of a kick and the seed of its field sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord {
    pub time: f64,
    pub mark_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState<T> {
    pub y: GridFunction<T>,
    pub elapsed: T,
    pub jumps: Vec<JumpRecord>,
}

/// Homogeneous Poisson arrivals.
pub struct PoissonClock {
    gaps: Exp<f64>,
    rng: StreamRng,
}

impl PoissonClock {
    pub fn new(rate: f64, rng: StreamRng) -> Result<Self> {
        let gaps = Exp::new(rate).map_err(|e| invalid("rate", e.to_string()))?;
        if !(rate > 0.0) {
            return Err(invalid("rate", "must be positive"));
        }
        Ok(PoissonClock { gaps, rng })
    }

    pub fn next_gap(&mut self) -> f64 {
        self.gaps.sample(&mut self.rng)
    }

    /// Arrival times in `(0, t]`.
    pub fn arrivals_until(&mut self, t: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut s = self.next_gap();
        while s <= t {
            out.push(s);
            s += self.next_gap();
        }
        out
    }
}

/// `Y ← Y (1 + clip(h, ±√n)/√n)` cellwise.
pub fn apply_jump<T: Scalar>(y: &mut [T], mark: &[T], n: usize) {
    let root = T::from_count(n).sqrt();
    for (v, &h) in y.iter_mut().zip(mark) {
        let h = h.max(-root).min(root);
        *v = *v * (T::one() + h / root);
    }
}

/// Draws the arrival log of one replica.
pub fn draw_jumps(t: f64, n: usize, seed: u64) -> Result<Vec<JumpRecord>> {
    let mut clock = PoissonClock::new(n as f64, rng::stream(seed, &[tag::JUMP]))?;
    Ok(clock
        .arrivals_until(t)
        .into_iter()
        .enumerate()
        .map(|(j, time)| JumpRecord {
            time,
            mark_seed: rng::derive_seed(seed, &[tag::MARK, j as u64]),
        })
        .collect())
}

/// Evolves `Y` through a given arrival log. Each kick is applied at the
/// end of the time step containing its arrival.
pub fn evolve_dual_with<T: Scalar>(
    phi: &GridFunction<T>,
    t: T,
    n: usize,
    factor: &GridFactor<T>,
    scheme: Scheme<T>,
    jumps: &[JumpRecord],
) -> Result<DualState<T>> {
    if phi.torus() != factor.torus() {
        return Err(Error::ShapeMismatch);
    }
    if phi.min() < T::zero() {
        return Err(invalid("phi", "must be non-negative"));
    }
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    let steps = scheme.steps(t)?;
    let dt = scheme.dt.as_f64();
    let mut flow = AbsorbingFlow::new(*phi.torus(), scheme);
    let mut y = phi.clone();
    let mut mark = vec![T::zero(); y.values().len()];
    let mut done = 0;
    for jump in jumps {
        let at = ((jump.time / dt).ceil() as usize).clamp(1, steps.max(1)).min(steps);
        if at > done {
            flow.advance(y.values_mut(), at - done);
            done = at;
        }
        let mut r = rng::stream(jump.mark_seed, &[]);
        factor.sample_into(T::one(), &mut r, &mut mark);
        apply_jump(y.values_mut(), &mark, n);
        if y.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: done });
        }
    }
    flow.advance(y.values_mut(), steps - done);
    Ok(DualState {
        y,
        elapsed: T::from_count(steps) * scheme.dt,
        jumps: jumps.to_vec(),
    })
}

/// One replica of `Y^{(n)}` from `phi` over `[0, t]`.
pub fn evolve_dual<T: Scalar>(
    phi: &GridFunction<T>,
    t: T,
    n: usize,
    factor: &GridFactor<T>,
    scheme: Scheme<T>,
    seed: u64,
) -> Result<DualState<T>> {
    let jumps = draw_jumps(t.as_f64(), n, seed)?;
    evolve_dual_with(phi, t, n, factor, scheme, &jumps)
}

/// Initial measure of the superprocess side of the duality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DualMeasure<T> {
    /// Lebesgue measure on the torus.
    TorusLebesgue,
    PointMasses(Vec<(Vec<T>, T)>),
}

impl<T: Scalar> DualMeasure<T> {
    /// `⟨g, μ⟩`.
    pub fn pair(&self, g: &GridFunction<T>) -> Result<T> {
        match self {
            DualMeasure::TorusLebesgue => Ok(g.integral()),
            DualMeasure::PointMasses(atoms) => atoms
                .iter()
                .map(|(x, w)| g.at(x).map(|v| v * *w))
                .sum(),
        }
    }
}

/// `E exp(-⟨φ, X_t⟩)` from the log-Laplace SPDE, `E exp(-⟨μ, Y_t⟩)` from
/// the dual, and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityGap {
    pub n: usize,
    pub left: Estimate,
    pub right: Estimate,
    pub gap: Estimate,
    pub mean_jumps: Estimate,
}

#[allow(clippy::too_many_arguments)]
pub fn duality_gap<T: Scalar>(
    phi: &GridFunction<T>,
    mu: &DualMeasure<T>,
    t: T,
    n: usize,
    factor: &std::sync::Arc<GridFactor<T>>,
    scheme: Scheme<T>,
    replicas: usize,
    seed: u64,
    exec: &Executor,
) -> Result<DualityGap> {
    let rows = exec.try_map(replicas, |r| -> Result<(f64, f64, f64)> {
        let noise = NoisePath::new(factor.clone(), scheme.dt, rng::derive_seed(seed, &[tag::REPLICA, r as u64, 0]))?;
        let u = solve_log_laplace(phi, T::one(), t, &noise, scheme, &[])?.last();
        let left = (-mu.pair(&u)?).exp().as_f64();
        let dual_seed = rng::derive_seed(seed, &[tag::REPLICA, r as u64, 1, n as u64]);
        let state = evolve_dual(phi, t, n, factor, scheme, dual_seed)?;
        let right = (-mu.pair(&state.y)?).exp().as_f64();
        Ok((left, right, state.jumps.len() as f64))
    })?;
    let left = Estimate::from_samples(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let right = Estimate::from_samples(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let mean_jumps = Estimate::from_samples(&rows.iter().map(|r| r.2).collect::<Vec<_>>());
    Ok(DualityGap {
        n,
        left,
        right,
        gap: left.minus(&right),
        mean_jumps,
    })
}

/// Third moments of `Y_t(x)` relative to `φ_ρ(x)³`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThirdMomentScan {
    /// Smallest `N` with `φ ≤ N φ_ρ` on the grid.
    pub weight_multiple: f64,
    /// `(n, t, probe index, E Y_t(x)³, ratio)`.
    pub rows: Vec<(usize, f64, usize, Estimate, f64)>,
    /// Largest ratio for each `n` of the ladder.
    pub max_ratio: Vec<(usize, f64)>,
    /// `max / min - 1` of the per-`n` maxima.
    pub spread: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn third_moment_scan<T: Scalar>(
    phi: &GridFunction<T>,
    weight: &WeightFamily<T>,
    times: &[T],
    ladder: &[usize],
    probes: &[Vec<T>],
    factor: &GridFactor<T>,
    scheme: Scheme<T>,
    replicas: usize,
    seed: u64,
    exec: &Executor,
) -> Result<ThirdMomentScan> {
    let torus = *phi.torus();
    let rho_grid = weight.on(torus);
    let weight_multiple = phi
        .values()
        .iter()
        .zip(rho_grid.values())
        .map(|(&p, &w)| (p / w).as_f64())
        .fold(0.0, f64::max);
    let cells: Vec<usize> = probes.iter().map(|x| torus.locate(x)).collect::<Result<_>>()?;
    let horizon = times.iter().copied().fold(T::zero(), T::max);
    let mut rows = Vec::new();
    let mut max_ratio = Vec::new();
    for &n in ladder {
        let samples = exec.try_map(replicas, |r| -> Result<Vec<Vec<f64>>> {
            let jumps = draw_jumps(horizon.as_f64(), n, rng::derive_seed(seed, &[tag::REPLICA, r as u64, n as u64]))?;
            times
                .iter()
                .map(|&t| {
                    let upto: Vec<JumpRecord> = jumps.iter().copied().filter(|j| j.time <= t.as_f64()).collect();
                    let y = evolve_dual_with(phi, t, n, factor, scheme, &upto)?.y;
                    Ok(cells.iter().map(|&c| y.values()[c].as_f64().powi(3)).collect())
                })
                .collect()
        })?;
        let mut best = 0.0_f64;
        for (ti, &t) in times.iter().enumerate() {
            for (pi, &c) in cells.iter().enumerate() {
                let xs: Vec<f64> = samples.iter().map(|s| s[ti][pi]).collect();
                let e = Estimate::from_samples(&xs);
                let ratio = e.mean / rho_grid.values()[c].as_f64().powi(3);
                best = best.max(ratio);
                rows.push((n, t.as_f64(), pi, e, ratio));
            }
        }
        max_ratio.push((n, best));
    }
    let hi = max_ratio.iter().map(|m| m.1).fold(0.0, f64::max);
    let lo = max_ratio.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let spread = if hi == 0.0 { 0.0 } else { hi / lo - 1.0 };
    Ok(ThirdMomentScan {
        weight_multiple,
        rows,
        max_ratio,
        spread,
    })
}

/// Jump counts of `replicas` independent clocks over `[0, t]`.
pub fn jump_counts(t: f64, n: usize, replicas: usize, seed: u64) -> Result<Vec<usize>> {
    (0..replicas)
        .map(|r| draw_jumps(t, n, rng::derive_seed(seed, &[tag::REPLICA, r as u64])).map(|j| j.len()))
        .collect()
}
