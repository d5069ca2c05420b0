//! Splitting solvers for the parabolic Anderson model and the log-Laplace
//! equation on the torus.
//!
//! One step of the symmetric scheme is: half heat step, reaction
//! `u ← u / (1 + u dt / 2)` (log-Laplace only), multiplicative noise
//! factor, half heat step. Every substep maps non-negative data to
//! non-negative data and is monotone, so positivity and the shared-noise
//! comparison inequalities hold for the discrete solution exactly.

use std::io::Write;
use std::sync::Arc;

use num_traits::Float;
use serde::Serialize;

use crate::covariance::{grid_covariance_factor, CovarianceKernel, GridFactor, NoiseIncrement};
use crate::error::{invalid, Error, Result};
use crate::heatkernel::{GridFunction, HeatMultiplier, HeatScratch, HeatSemigroup, Torus};
use crate::rng::{self, tag};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Ordering {
    /// Heat half step, reaction, noise, heat half step.
    #[default]
    Strang,
    /// Full heat step, reaction, noise.
    Lie,
}

impl Ordering {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "strang" => Ok(Ordering::Strang),
            "lie" => Ok(Ordering::Lie),
            other => Err(invalid("ordering", format!("unknown ordering `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scheme<T> {
    pub dt: T,
    pub ordering: Ordering,
}

impl<T: Scalar> Scheme<T> {
    pub fn new(dt: T, ordering: Ordering) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(invalid("dt", "must be positive and finite"));
        }
        Ok(Scheme { dt, ordering })
    }

    pub fn strang(dt: T) -> Result<Self> {
        Self::new(dt, Ordering::Strang)
    }

    /// Number of steps covering `[0, horizon]`.
    pub fn steps(&self, horizon: T) -> Result<usize> {
        if !(horizon >= T::zero()) {
            return Err(invalid("horizon", "must be non-negative"));
        }
        Ok((horizon / self.dt).round().to_usize().unwrap_or(0))
    }
}

/// A realization of the driving noise, addressed by step index.
///
/// Increments are regenerated on demand from `(seed, step)`, so replaying
/// a path, or driving several solvers with it, sees bit-identical values.
/// `gain` rescales the field, turning a factor of `Θ` into one of `a Θ`
/// with `gain = √a` while keeping the underlying draws.
#[derive(Debug, Clone)]
pub struct NoisePath<T> {
    factor: Arc<GridFactor<T>>,
    dt: T,
    seed: u64,
    gain: T,
}

impl<T: Scalar> NoisePath<T> {
    pub fn new(factor: Arc<GridFactor<T>>, dt: T, seed: u64) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(invalid("dt", "must be positive"));
        }
        Ok(NoisePath {
            factor,
            dt,
            seed,
            gain: T::one(),
        })
    }

    /// The zero field on `torus`.
    pub fn silent(torus: Torus<T>, dt: T) -> Result<Self> {
        let zero = CovarianceKernel::constant(torus.dim(), T::zero())?;
        Self::new(Arc::new(grid_covariance_factor(&zero, &torus)?), dt, 0)
    }

    pub fn with_gain(mut self, gain: T) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn torus(&self) -> &Torus<T> {
        self.factor.torus()
    }

    pub fn factor(&self) -> &GridFactor<T> {
        &self.factor
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    pub fn is_silent(&self) -> bool {
        self.factor.rank() == 0 || self.gain == T::zero()
    }

    /// Variance of `ΔW` at cell `i` over one step.
    pub fn step_variance(&self, i: usize) -> T {
        self.gain * self.gain * self.factor.variance()[i] * self.dt
    }

    pub fn increment_into(&self, step: usize, out: &mut [T]) {
        let mut r = rng::stream(self.seed, &[tag::NOISE, step as u64]);
        self.factor
            .sample_into(self.dt * self.gain * self.gain, &mut r, out);
    }

    pub fn increment(&self, step: usize) -> NoiseIncrement<T> {
        let mut values = vec![T::zero(); self.torus().len()];
        self.increment_into(step, &mut values);
        NoiseIncrement {
            torus: *self.torus(),
            dt: self.dt,
            values,
        }
    }
}

/// Saved slices of one solve. The field at save `k` is
/// `exp(log_scales[k]) · slices[k]`; the scale stays zero unless the
/// solve was renormalized.
#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub times: Vec<T>,
    pub slices: Vec<GridFunction<T>>,
    pub log_scales: Vec<T>,
    pub dt: T,
    pub ordering: Ordering,
    pub ito_correction: bool,
}

pub type PamSolution<T> = Solution<T>;
pub type LogLaplaceSolution<T> = Solution<T>;

impl<T: Scalar> Solution<T> {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Field at save `k` in absolute units.
    pub fn field(&self, k: usize) -> GridFunction<T> {
        if self.log_scales[k] == T::zero() {
            self.slices[k].clone()
        } else {
            self.slices[k].scale(self.log_scales[k].exp())
        }
    }

    pub fn last(&self) -> GridFunction<T> {
        self.field(self.len() - 1)
    }

    /// `log max_x` of the field at save `k`.
    pub fn log_max(&self, k: usize) -> T {
        self.log_scales[k] + self.slices[k].max().ln()
    }

    /// `log max` restricted to cells with `|x|_∞ ≤ radius`.
    pub fn log_max_within(&self, k: usize, radius: T) -> T {
        let s = &self.slices[k];
        let torus = s.torus();
        let m = (0..torus.len())
            .filter(|&i| torus.point(i).iter().all(|c| Float::abs(*c) <= radius))
            .map(|i| s.values()[i])
            .fold(T::zero(), T::max);
        self.log_scales[k] + m.ln()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Reaction {
    Linear,
    Absorbing,
}

#[derive(Clone, Copy, PartialEq)]
enum NoiseMode {
    /// `exp(ΔW - ½ Var ΔW)`: one-step mean exactly one.
    Ito,
    /// Implicit midpoint `(1 + ΔW/2) / (1 - ΔW/2)`, consistent with the
    /// Stratonovich integral.
    Midpoint,
}

struct Stepper<'a, T: Scalar> {
    semigroup: HeatSemigroup<T>,
    half: HeatMultiplier<T>,
    full: HeatMultiplier<T>,
    scratch: HeatScratch<T>,
    noise: &'a NoisePath<T>,
    increment: Vec<T>,
    correction: Vec<T>,
    scheme: Scheme<T>,
    reaction: Reaction,
    mode: NoiseMode,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    fn new(noise: &'a NoisePath<T>, scheme: Scheme<T>, reaction: Reaction, mode: NoiseMode) -> Result<Self> {
        if Float::abs(noise.dt() - scheme.dt) > T::lit(1e-12) * scheme.dt {
            return Err(invalid("dt", "noise path and scheme use different time steps"));
        }
        let torus = *noise.torus();
        let semigroup = HeatSemigroup::new(torus);
        let half = semigroup.multiplier(scheme.dt / T::lit(2.0));
        let full = semigroup.multiplier(scheme.dt);
        let scratch = semigroup.scratch();
        let correction = (0..torus.len())
            .map(|i| noise.step_variance(i) / T::lit(2.0))
            .collect();
        Ok(Stepper {
            semigroup,
            half,
            full,
            scratch,
            noise,
            increment: vec![T::zero(); torus.len()],
            correction,
            scheme,
            reaction,
            mode,
        })
    }

    fn react(&self, u: &mut [T]) {
        if self.reaction == Reaction::Absorbing {
            let c = self.scheme.dt / T::lit(2.0);
            for v in u.iter_mut() {
                *v = *v / (T::one() + *v * c);
            }
        }
    }

    fn kick(&mut self, u: &mut [T], step: usize) -> Result<()> {
        if self.noise.is_silent() {
            return Ok(());
        }
        self.noise.increment_into(step, &mut self.increment);
        match self.mode {
            NoiseMode::Ito => {
                for ((v, &dw), &c) in u.iter_mut().zip(&self.increment).zip(&self.correction) {
                    *v = *v * (dw - c).exp();
                }
            }
            NoiseMode::Midpoint => {
                let half = T::lit(0.5);
                for (v, &dw) in u.iter_mut().zip(&self.increment) {
                    let den = T::one() - half * dw;
                    if !(den > T::zero()) {
                        return Err(invalid("dt", format!("midpoint factor degenerates at step {step}")));
                    }
                    *v = *v * (T::one() + half * dw) / den;
                }
            }
        }
        Ok(())
    }

    fn step(&mut self, u: &mut [T], step: usize) -> Result<()> {
        match self.scheme.ordering {
            Ordering::Strang => {
                self.semigroup
                    .apply_nonneg_in_place(u, &self.half, &mut self.scratch);
                self.react(u);
                self.kick(u, step)?;
                self.semigroup
                    .apply_nonneg_in_place(u, &self.half, &mut self.scratch);
            }
            Ordering::Lie => {
                self.semigroup
                    .apply_nonneg_in_place(u, &self.full, &mut self.scratch);
                self.react(u);
                self.kick(u, step)?;
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        Ok(())
    }
}

/// Noise-free flow `∂u = ½Δu - ½u²` with the same splitting as the
/// solvers, advanced a whole number of steps at a time.
pub struct AbsorbingFlow<T: Scalar> {
    semigroup: HeatSemigroup<T>,
    half: HeatMultiplier<T>,
    full: HeatMultiplier<T>,
    scratch: HeatScratch<T>,
    scheme: Scheme<T>,
}

impl<T: Scalar> AbsorbingFlow<T> {
    pub fn new(torus: Torus<T>, scheme: Scheme<T>) -> Self {
        let semigroup = HeatSemigroup::new(torus);
        let half = semigroup.multiplier(scheme.dt / T::lit(2.0));
        let full = semigroup.multiplier(scheme.dt);
        let scratch = semigroup.scratch();
        AbsorbingFlow {
            semigroup,
            half,
            full,
            scratch,
            scheme,
        }
    }

    pub fn scheme(&self) -> &Scheme<T> {
        &self.scheme
    }

    pub fn advance(&mut self, u: &mut [T], steps: usize) {
        let c = self.scheme.dt / T::lit(2.0);
        for _ in 0..steps {
            match self.scheme.ordering {
                Ordering::Strang => {
                    self.semigroup
                        .apply_nonneg_in_place(u, &self.half, &mut self.scratch);
                    u.iter_mut().for_each(|v| *v = *v / (T::one() + *v * c));
                    self.semigroup
                        .apply_nonneg_in_place(u, &self.half, &mut self.scratch);
                }
                Ordering::Lie => {
                    self.semigroup
                        .apply_nonneg_in_place(u, &self.full, &mut self.scratch);
                    u.iter_mut().for_each(|v| *v = *v / (T::one() + *v * c));
                }
            }
        }
    }
}

/// Step indices for the requested save times (snapped to the mesh). An
/// empty request saves the final time only.
fn save_steps<T: Scalar>(save_times: &[T], scheme: &Scheme<T>, steps: usize) -> Result<Vec<usize>> {
    let mut idx: Vec<usize> = if save_times.is_empty() {
        vec![steps]
    } else {
        save_times
            .iter()
            .map(|&t| scheme.steps(t))
            .collect::<Result<_>>()?
    };
    if idx.iter().any(|&k| k > steps) {
        return Err(invalid("save_times", "must lie within the horizon"));
    }
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

struct Request<'a, T: Scalar> {
    initial: GridFunction<T>,
    horizon: T,
    noise: &'a NoisePath<T>,
    scheme: Scheme<T>,
    save_times: &'a [T],
    reaction: Reaction,
    mode: NoiseMode,
    renormalize: bool,
}

fn integrate<T: Scalar>(req: Request<'_, T>) -> Result<Solution<T>> {
    if req.initial.torus() != req.noise.torus() {
        return Err(Error::ShapeMismatch);
    }
    if req.initial.min() < T::zero() {
        return Err(invalid("f", "initial datum must be non-negative"));
    }
    let steps = req.scheme.steps(req.horizon)?;
    let saves = save_steps(req.save_times, &req.scheme, steps)?;
    let mut stepper = Stepper::new(req.noise, req.scheme, req.reaction, req.mode)?;
    let mut u = req.initial.clone();
    let mut log_scale = T::zero();
    let mut out = Solution {
        times: Vec::with_capacity(saves.len()),
        slices: Vec::with_capacity(saves.len()),
        log_scales: Vec::with_capacity(saves.len()),
        dt: req.scheme.dt,
        ordering: req.scheme.ordering,
        ito_correction: req.mode == NoiseMode::Ito,
    };
    let mut next = saves.iter().peekable();
    for k in 0..=steps {
        if k > 0 {
            stepper.step(u.values_mut(), k - 1)?;
            if req.renormalize {
                let m = u.max();
                if m > T::zero() {
                    u.values_mut().iter_mut().for_each(|v| *v = *v / m);
                    log_scale = log_scale + m.ln();
                }
            }
        }
        if next.peek() == Some(&&k) {
            next.next();
            out.times.push(T::from_count(k) * req.scheme.dt);
            out.slices.push(u.clone());
            out.log_scales.push(log_scale);
        }
    }
    Ok(out)
}

/// Itô PAM `∂v = ½Δv + v ∂W`, `v(0) = f`.
pub fn solve_pam<T: Scalar>(
    f: &GridFunction<T>,
    horizon: T,
    noise: &NoisePath<T>,
    scheme: Scheme<T>,
    save_times: &[T],
) -> Result<PamSolution<T>> {
    integrate(Request {
        initial: f.clone(),
        horizon,
        noise,
        scheme,
        save_times,
        reaction: Reaction::Linear,
        mode: NoiseMode::Ito,
        renormalize: false,
    })
}

/// As [`solve_pam`], dividing out the running maximum after every step so
/// that long or strongly coupled runs neither overflow nor underflow.
pub fn solve_pam_renormalized<T: Scalar>(
    f: &GridFunction<T>,
    horizon: T,
    noise: &NoisePath<T>,
    scheme: Scheme<T>,
    save_times: &[T],
) -> Result<PamSolution<T>> {
    integrate(Request {
        initial: f.clone(),
        horizon,
        noise,
        scheme,
        save_times,
        reaction: Reaction::Linear,
        mode: NoiseMode::Ito,
        renormalize: true,
    })
}

/// `∂u = ½Δu - ½u² + u ∂W`, `u(0) = λ f`.
pub fn solve_log_laplace<T: Scalar>(
    f: &GridFunction<T>,
    lambda: T,
    horizon: T,
    noise: &NoisePath<T>,
    scheme: Scheme<T>,
    save_times: &[T],
) -> Result<LogLaplaceSolution<T>> {
    if !(lambda >= T::zero()) {
        return Err(invalid("lambda", "must be non-negative"));
    }
    integrate(Request {
        initial: f.scale(lambda),
        horizon,
        noise,
        scheme,
        save_times,
        reaction: Reaction::Absorbing,
        mode: NoiseMode::Ito,
        renormalize: false,
    })
}

/// Two discretizations of the Stratonovich PAM for `C = a Θ`.
#[derive(Debug, Clone)]
pub struct StratonovichPair<T> {
    /// `a`, including the noise path's gain.
    pub coupling: T,
    /// Itô solution times `e^{a t / 2}`.
    pub via_identity: Solution<T>,
    /// Midpoint scheme without the Itô correction.
    pub direct: Solution<T>,
    /// `‖direct - via_identity‖_∞ / ‖via_identity‖_∞` per save time.
    pub relative_gap: Vec<T>,
}

pub fn solve_stratonovich_pam<T: Scalar>(
    f: &GridFunction<T>,
    horizon: T,
    noise: &NoisePath<T>,
    scheme: Scheme<T>,
    save_times: &[T],
) -> Result<StratonovichPair<T>> {
    let (a, _) = noise
        .factor()
        .kernel()
        .as_scaled_theta()
        .ok_or(Error::UnsupportedKernel("scaled-theta"))?;
    let coupling = a * noise.gain() * noise.gain();
    let ito = solve_pam(f, horizon, noise, scheme, save_times)?;
    let direct = integrate(Request {
        initial: f.clone(),
        horizon,
        noise,
        scheme,
        save_times,
        reaction: Reaction::Linear,
        mode: NoiseMode::Midpoint,
        renormalize: false,
    })?;
    let mut via_identity = ito;
    via_identity.ito_correction = false;
    let mut relative_gap = Vec::with_capacity(direct.len());
    for k in 0..direct.len() {
        let t = via_identity.times[k];
        via_identity.slices[k] = via_identity.slices[k].scale((coupling * t / T::lit(2.0)).exp());
        let reference = via_identity.slices[k].sup_norm();
        let gap = direct.slices[k].distance(&via_identity.slices[k])?;
        relative_gap.push(if reference > T::zero() { gap / reference } else { gap });
    }
    Ok(StratonovichPair {
        coupling,
        via_identity,
        direct,
        relative_gap,
    })
}

/// `u(λ)`, `u(λ + δ)`, the difference quotient `w_δ` and the PAM solution,
/// all on one noise path.
#[derive(Debug, Clone)]
pub struct DerivativePair<T> {
    pub lambda: T,
    pub delta: T,
    pub lower: LogLaplaceSolution<T>,
    pub upper: LogLaplaceSolution<T>,
    pub quotient: Vec<GridFunction<T>>,
    pub pam: PamSolution<T>,
}

pub fn derivative_quotient<T: Scalar>(
    f: &GridFunction<T>,
    lambda: T,
    delta: T,
    horizon: T,
    noise: &NoisePath<T>,
    scheme: Scheme<T>,
    save_times: &[T],
) -> Result<DerivativePair<T>> {
    if !(delta > T::zero()) {
        return Err(invalid("delta", "must be positive"));
    }
    let lower = solve_log_laplace(f, lambda, horizon, noise, scheme, save_times)?;
    let upper = solve_log_laplace(f, lambda + delta, horizon, noise, scheme, save_times)?;
    let pam = solve_pam(f, horizon, noise, scheme, save_times)?;
    let quotient = lower
        .slices
        .iter()
        .zip(&upper.slices)
        .map(|(lo, hi)| hi.zip_with(lo, |b, a| (b - a) / delta))
        .collect::<Result<_>>()?;
    Ok(DerivativePair {
        lambda,
        delta,
        lower,
        upper,
        quotient,
        pam,
    })
}

/// Worst violations of the shared-noise comparison inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `-min u(λ)`, clipped at zero.
    pub negativity: f64,
    /// `max (u(λ) - λ v)`.
    pub above_linear: f64,
    /// `max (u(λ) - u(λ + δ))`.
    pub non_monotone: f64,
    /// `-min w_δ`.
    pub quotient_negativity: f64,
    /// `max (w_δ - v)`.
    pub quotient_above_linear: f64,
}

impl ComparisonReport {
    pub fn worst(&self) -> f64 {
        [
            self.negativity,
            self.above_linear,
            self.non_monotone,
            self.quotient_negativity,
            self.quotient_above_linear,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl<T: Scalar> DerivativePair<T> {
    pub fn comparison(&self) -> ComparisonReport {
        let mut r = ComparisonReport {
            negativity: 0.0,
            above_linear: f64::NEG_INFINITY,
            non_monotone: f64::NEG_INFINITY,
            quotient_negativity: 0.0,
            quotient_above_linear: f64::NEG_INFINITY,
        };
        let lam = self.lambda.as_f64();
        for k in 0..self.lower.len() {
            let lo = self.lower.slices[k].values();
            let hi = self.upper.slices[k].values();
            let v = self.pam.slices[k].values();
            let w = self.quotient[k].values();
            for i in 0..lo.len() {
                let (l, h, p, q) = (lo[i].as_f64(), hi[i].as_f64(), v[i].as_f64(), w[i].as_f64());
                r.negativity = r.negativity.max(-l);
                r.above_linear = r.above_linear.max(l - lam * p);
                r.non_monotone = r.non_monotone.max(l - h);
                r.quotient_negativity = r.quotient_negativity.max(-q);
                r.quotient_above_linear = r.quotient_above_linear.max(q - p);
            }
        }
        r
    }
}

/// `⟨u(t), m⟩ = h^d Σ u` at every save time.
pub fn total_mass_series<T: Scalar>(sol: &LogLaplaceSolution<T>) -> Vec<T> {
    sol.slices
        .iter()
        .zip(&sol.log_scales)
        .map(|(s, &l)| s.integral() * l.exp())
        .collect()
}

/// Writes a solution as CSV: either every cell (`t, cell, value`) or one
/// summary row per save time (`t, min, max, mean, total_mass`).
pub fn write_trajectory_csv<T: Scalar, W: Write>(sol: &Solution<T>, out: W, summarized: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if summarized {
        w.write_record(["t", "min", "max", "mean", "total_mass"])?;
        for k in 0..sol.len() {
            let f = sol.field(k);
            w.write_record([
                format!("{:.12e}", sol.times[k]),
                format!("{:.12e}", f.min()),
                format!("{:.12e}", f.max()),
                format!("{:.12e}", f.mean()),
                format!("{:.12e}", f.integral()),
            ])?;
        }
    } else {
        w.write_record(["t", "cell", "value"])?;
        for k in 0..sol.len() {
            let f = sol.field(k);
            for (i, v) in f.values().iter().enumerate() {
                w.write_record([format!("{:.12e}", sol.times[k]), i.to_string(), format!("{v:.12e}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::ThetaProfile;
    use crate::heatkernel::apply_heat_semigroup;

    fn bump(t: Torus<f64>) -> GridFunction<f64> {
        GridFunction::from_fn(t, |x| (-x[0] * x[0]).exp())
    }

    fn theta_noise(t: Torus<f64>, a: f64, dt: f64, seed: u64) -> NoisePath<f64> {
        let k = CovarianceKernel::scaled_theta(1, a, ThetaProfile::Gaussian).unwrap();
        NoisePath::new(Arc::new(grid_covariance_factor(&k, &t).unwrap()), dt, seed).unwrap()
    }

    #[test]
    fn silent_pam_is_heat_flow() {
        let t = Torus::new(1, 256, 8.0).unwrap();
        let f = bump(t);
        let noise = NoisePath::silent(t, 1e-3).unwrap();
        let v = solve_pam(&f, 1.0, &noise, Scheme::strang(1e-3).unwrap(), &[]).unwrap();
        let heat = apply_heat_semigroup(&f, 1.0).unwrap();
        assert!(v.last().distance(&heat).unwrap() < 1e-8);
    }

    #[test]
    fn noise_replays_bit_identically() {
        let t = Torus::new(1, 32, 8.0).unwrap();
        let noise = theta_noise(t, 1.0, 1e-3, 7);
        assert_eq!(noise.increment(5), noise.increment(5));
        assert_ne!(noise.increment(5), noise.increment(6));
    }

    #[test]
    fn zero_lambda_stays_zero() {
        let t = Torus::new(1, 32, 8.0).unwrap();
        let noise = theta_noise(t, 1.0, 1e-3, 1);
        let u = solve_log_laplace(&bump(t), 0.0, 0.5, &noise, Scheme::strang(1e-3).unwrap(), &[]).unwrap();
        assert_eq!(u.last().sup_norm(), 0.0);
    }

    #[test]
    fn constant_datum_closed_form() {
        let t = Torus::new(1, 8, 4.0).unwrap();
        let noise = NoisePath::silent(t, 1e-4).unwrap();
        for k in [1.0, 10.0] {
            let f = GridFunction::constant(t, k);
            let times = [0.5, 1.0, 2.0, 4.0];
            let u = solve_log_laplace(&f, 1.0, 4.0, &noise, Scheme::strang(1e-4).unwrap(), &times).unwrap();
            for (j, &s) in times.iter().enumerate() {
                let exact = 1.0 / (s / 2.0 + 1.0 / k);
                assert!((u.slices[j].max() - exact).abs() < 1e-6);
            }
            let mass = total_mass_series(&u);
            assert!(mass.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn comparison_holds_on_shared_noise() {
        let t = Torus::new(1, 64, 8.0).unwrap();
        let noise = theta_noise(t, 1.0, 1e-3, 3);
        let times = [0.25, 0.5, 1.0];
        let pair = derivative_quotient(&bump(t), 0.5, 0.1, 1.0, &noise, Scheme::strang(1e-3).unwrap(), &times).unwrap();
        assert!(pair.comparison().worst() <= 1e-12);
    }

    #[test]
    fn pam_is_linear() {
        let t = Torus::new(1, 64, 8.0).unwrap();
        let noise = theta_noise(t, 2.0, 1e-3, 11);
        let s = Scheme::strang(1e-3).unwrap();
        let f1 = bump(t);
        let f2 = GridFunction::from_fn(t, |x| 1.0 / (1.0 + x[0] * x[0]));
        let a = solve_pam(&f1, 0.5, &noise, s, &[]).unwrap().last();
        let b = solve_pam(&f2, 0.5, &noise, s, &[]).unwrap().last();
        let c = solve_pam(&f1.add(&f2).unwrap(), 0.5, &noise, s, &[]).unwrap().last();
        let sum = a.add(&b).unwrap();
        assert!(c.distance(&sum).unwrap() <= 1e-12 * sum.sup_norm());
    }

    #[test]
    fn renormalized_solve_matches_plain() {
        let t = Torus::new(1, 32, 8.0).unwrap();
        let noise = theta_noise(t, 4.0, 1e-3, 5);
        let s = Scheme::strang(1e-3).unwrap();
        let plain = solve_pam(&bump(t), 1.0, &noise, s, &[]).unwrap();
        let renorm = solve_pam_renormalized(&bump(t), 1.0, &noise, s, &[]).unwrap();
        let gap = plain.last().distance(&renorm.last()).unwrap();
        assert!(gap <= 1e-10 * plain.last().sup_norm());
    }

    #[test]
    fn stratonovich_schemes_agree() {
        let t = Torus::new(1, 32, 8.0).unwrap();
        let noise = theta_noise(t, 1.0, 1e-4, 2);
        let f = GridFunction::constant(t, 1.0);
        let pair = solve_stratonovich_pam(&f, 1.0, &noise, Scheme::strang(1e-4).unwrap(), &[]).unwrap();
        assert!(pair.relative_gap[0] < 1e-3);
        assert_eq!(pair.coupling, 1.0);
    }

    #[test]
    fn stratonovich_needs_scaled_kernel() {
        let t = Torus::new(1, 8, 4.0).unwrap();
        let noise = NoisePath::silent(t, 1e-3).unwrap();
        let f = GridFunction::constant(t, 1.0);
        assert!(solve_stratonovich_pam(&f, 0.1, &noise, Scheme::strang(1e-3).unwrap(), &[]).is_err());
    }
}
