//! Branching Brownian motion in a random environment.
//!
//! Epoch `i` covers `[i/n, (i+1)/n)`. At each epoch boundary every particle
//! takes a Gaussian step of variance `1/n` per axis, the environment is
//! drawn jointly at the new positions and clipped to `±√n`, and each
//! particle splits in two with probability `½ + ξ/(2√n)` or dies.

use rand::Rng;
use serde::Serialize;

use crate::covariance::{sample_at_points, CovarianceKernel};
use crate::error::{invalid, Error, Result};
use crate::readout::Readout;
use crate::rng::{self, tag};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Environment<T> {
    /// Centered Gaussian field with covariance `C`.
    Field(CovarianceKernel<T>),
    /// Deterministic field value (before truncation) at every site.
    Fixed(T),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchingConfig<T> {
    n: usize,
    dim: usize,
    environment: Environment<T>,
    initial: Vec<T>,
    cap: usize,
    horizon: T,
}

pub const DEFAULT_CAP: usize = 1_000_000;

impl<T: Scalar> BranchingConfig<T> {
    /// `initial` holds `dim` coordinates per particle.
    pub fn new(n: usize, dim: usize, environment: Environment<T>, initial: Vec<T>, horizon: T) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if dim == 0 || initial.len() % dim != 0 {
            return Err(invalid("initial", "coordinates must come in groups of `dim`"));
        }
        if let Environment::Field(k) = &environment {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.dim(),
                });
            }
        }
        if !(horizon >= T::zero()) {
            return Err(invalid("horizon", "must be non-negative"));
        }
        Ok(BranchingConfig {
            n,
            dim,
            environment,
            initial,
            cap: DEFAULT_CAP,
            horizon,
        })
    }

    /// `k` particles at `x`.
    pub fn from_point(n: usize, environment: Environment<T>, x: &[T], k: usize, horizon: T) -> Result<Self> {
        let initial = x.iter().copied().cycle().take(x.len() * k).collect();
        Self::new(n, x.len(), environment, initial, horizon)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn environment(&self) -> &Environment<T> {
        &self.environment
    }

    pub fn epoch_length(&self) -> T {
        T::one() / T::from_count(self.n)
    }

    pub fn truncation(&self) -> T {
        T::from_count(self.n).sqrt()
    }

    pub fn epochs(&self) -> usize {
        self.epoch_of(self.horizon)
    }

    /// Epoch index nearest to time `t`.
    pub fn epoch_of(&self, t: T) -> usize {
        (t * T::from_count(self.n)).round().to_usize().unwrap_or(0)
    }

    pub fn initial_population(&self) -> ParticlePopulation<T> {
        ParticlePopulation {
            epoch: 0,
            dim: self.dim,
            n: self.n,
            positions: self.initial.clone(),
        }
    }
}

/// Particle positions at one epoch; each particle carries mass `1/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticlePopulation<T> {
    epoch: usize,
    dim: usize,
    n: usize,
    positions: Vec<T>,
}

impl<T: Scalar> ParticlePopulation<T> {
    pub fn new(epoch: usize, dim: usize, n: usize, positions: Vec<T>) -> Result<Self> {
        if dim == 0 || positions.len() % dim != 0 {
            return Err(invalid("positions", "coordinates must come in groups of `dim`"));
        }
        Ok(ParticlePopulation { epoch, dim, n, positions })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn time(&self) -> T {
        T::from_count(self.epoch) / T::from_count(self.n)
    }

    pub fn count(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_extinct(&self) -> bool {
        self.positions.is_empty()
    }

    /// `X(R^d) = count / n`.
    pub fn mass(&self) -> T {
        T::from_count(self.count()) / T::from_count(self.n)
    }

    pub fn positions(&self) -> impl Iterator<Item = &[T]> {
        self.positions.chunks(self.dim)
    }

    /// `X(A)` for a set given by its indicator.
    pub fn measure(&self, in_set: impl Fn(&[T]) -> bool) -> T {
        T::from_count(self.positions().filter(|p| in_set(p)).count()) / T::from_count(self.n)
    }
}

/// Outcome counts of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EpochTally {
    pub splits: usize,
    pub deaths: usize,
}

/// Advances one epoch.
pub fn step_epoch<T: Scalar, R: Rng + ?Sized>(
    pop: &ParticlePopulation<T>,
    config: &BranchingConfig<T>,
    rng: &mut R,
) -> Result<(ParticlePopulation<T>, EpochTally)> {
    if pop.count() > config.cap {
        return Err(Error::PopulationCap {
            cap: config.cap,
            epoch: pop.epoch,
            count: pop.count(),
        });
    }
    let sd = config.epoch_length().sqrt();
    let mut moved = pop.positions.clone();
    for x in moved.iter_mut() {
        *x = *x + sd * rng::normal::<T, _>(rng);
    }
    let k = pop.count();
    let bound = config.truncation();
    let field: Vec<T> = match &config.environment {
        Environment::Fixed(v) => vec![*v; k],
        Environment::Field(kernel) if k > 0 => sample_at_points(kernel, &moved, T::one(), rng)?,
        Environment::Field(_) => Vec::new(),
    };
    let mut next = Vec::with_capacity(moved.len() + moved.len() / 2);
    let mut tally = EpochTally { splits: 0, deaths: 0 };
    let half = T::lit(0.5);
    for (p, &xi) in moved.chunks(config.dim).zip(&field) {
        let xi = xi.max(-bound).min(bound);
        let split = half + xi / (T::lit(2.0) * bound);
        if T::lit(rng::uniform(rng)) < split {
            next.extend_from_slice(p);
            next.extend_from_slice(p);
            tally.splits += 1;
        } else {
            tally.deaths += 1;
        }
    }
    let out = ParticlePopulation {
        epoch: pop.epoch + 1,
        dim: pop.dim,
        n: pop.n,
        positions: next,
    };
    if out.count() > config.cap {
        return Err(Error::PopulationCap {
            cap: config.cap,
            epoch: out.epoch,
            count: out.count(),
        });
    }
    Ok((out, tally))
}

/// Runs to the horizon, calling `observe` on the population at every epoch
/// (including epoch 0).
pub fn run_observed<T: Scalar>(
    config: &BranchingConfig<T>,
    seed: u64,
    mut observe: impl FnMut(&ParticlePopulation<T>),
) -> Result<ParticlePopulation<T>> {
    let mut r = rng::stream(seed, &[tag::SPLIT]);
    let mut pop = config.initial_population();
    observe(&pop);
    for _ in 0..config.epochs() {
        pop = step_epoch(&pop, config, &mut r)?.0;
        observe(&pop);
    }
    Ok(pop)
}

/// Snapshots at the requested times, snapped to the epoch grid.
pub fn run<T: Scalar>(config: &BranchingConfig<T>, save_times: &[T], seed: u64) -> Result<Vec<ParticlePopulation<T>>> {
    let mut wanted: Vec<usize> = save_times.iter().map(|&t| config.epoch_of(t)).collect();
    if wanted.iter().any(|&e| e > config.epochs()) {
        return Err(invalid("save_times", "must lie within the horizon"));
    }
    wanted.sort_unstable();
    wanted.dedup();
    let mut out = Vec::with_capacity(wanted.len());
    run_observed(config, seed, |pop| {
        if wanted.binary_search(&pop.epoch).is_ok() {
            out.push(pop.clone());
        }
    })?;
    Ok(out)
}

/// `(⟨f, X⟩, ⟨f⊗f, X⊗X⟩)`.
pub fn empirical_pairing<T: Scalar>(pop: &ParticlePopulation<T>, f: &Readout<T>) -> (T, T) {
    let n = T::from_count(pop.n);
    let s: T = pop.positions().map(|p| f.eval(p)).sum();
    (s / n, s * s / (n * n))
}

/// Residual `M_t = ⟨f, X_t⟩ - ⟨f, X_0⟩ - ½ ∫ ⟨Δf, X_s⟩ ds` and the
/// predicted quadratic variation `∫ ⟨f², X_s⟩ ds + ∫ ⟨C f⊗f, X_s⊗X_s⟩ ds`,
/// both with trapezoidal time integrals, at every epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleSeries {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub quadratic_variation: Vec<f64>,
}

/// Per-epoch integrands of the martingale residual, so that trajectories
/// need not be stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReadout {
    pub f: f64,
    pub laplacian: f64,
    pub f_squared: f64,
    pub correlated: f64,
}

pub fn epoch_readout<T: Scalar>(
    pop: &ParticlePopulation<T>,
    f: &Readout<T>,
    environment: &Environment<T>,
) -> Result<EpochReadout> {
    let n = pop.n as f64;
    let mut sf = 0.0;
    let mut sl = 0.0;
    let mut s2 = 0.0;
    let values: Vec<f64> = pop.positions().map(|p| f.eval(p).as_f64()).collect();
    for (p, &v) in pop.positions().zip(&values) {
        sf += v;
        sl += f.laplacian(p)?.as_f64();
        s2 += v * v;
    }
    let correlated = match environment {
        Environment::Fixed(_) => 0.0,
        Environment::Field(k) => match k.as_constant() {
            Some(c) => c.as_f64() * sf * sf,
            None => {
                let pts: Vec<&[T]> = pop.positions().collect();
                let mut acc = 0.0;
                for (i, a) in pts.iter().enumerate() {
                    for (j, b) in pts.iter().enumerate() {
                        acc += k.at_r2(crate::dist2(a, b)).as_f64() * values[i] * values[j];
                    }
                }
                acc
            }
        },
    };
    Ok(EpochReadout {
        f: sf / n,
        laplacian: sl / n,
        f_squared: s2 / n,
        correlated: correlated / (n * n),
    })
}

/// Builds the residual series from per-epoch readouts spaced `1/n` apart.
pub fn martingale_series(readouts: &[EpochReadout], n: usize) -> MartingaleSeries {
    let dt = 1.0 / n as f64;
    let mut out = MartingaleSeries {
        times: Vec::with_capacity(readouts.len()),
        residual: Vec::with_capacity(readouts.len()),
        quadratic_variation: Vec::with_capacity(readouts.len()),
    };
    let Some(first) = readouts.first() else {
        return out;
    };
    let mut drift = 0.0;
    let mut qv = 0.0;
    for (k, r) in readouts.iter().enumerate() {
        if k > 0 {
            let p = &readouts[k - 1];
            drift += 0.5 * dt * (p.laplacian + r.laplacian);
            qv += 0.5 * dt * (p.f_squared + p.correlated + r.f_squared + r.correlated);
        }
        out.times.push(k as f64 * dt);
        out.residual.push(r.f - first.f - 0.5 * drift);
        out.quadratic_variation.push(qv);
    }
    out
}

/// Residual series along a stored trajectory (one population per epoch,
/// consecutive, starting anywhere).
pub fn martingale_residual<T: Scalar>(
    trajectory: &[ParticlePopulation<T>],
    f: &Readout<T>,
    environment: &Environment<T>,
) -> Result<MartingaleSeries> {
    let Some(first) = trajectory.first() else {
        return Ok(martingale_series(&[], 1));
    };
    if trajectory.windows(2).any(|w| w[1].epoch != w[0].epoch + 1) {
        return Err(invalid("trajectory", "populations must be consecutive epochs"));
    }
    let readouts = trajectory
        .iter()
        .map(|p| epoch_readout(p, f, environment))
        .collect::<Result<Vec<_>>>()?;
    let mut s = martingale_series(&readouts, first.n);
    let t0 = first.epoch as f64 / first.n as f64;
    s.times.iter_mut().for_each(|t| *t += t0);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_field() -> Environment<f64> {
        Environment::Field(CovarianceKernel::constant(1, 0.0).unwrap())
    }

    #[test]
    fn pairing_formulas() {
        let f = Readout::<f64>::gaussian_bump(vec![0.0], 1.0).unwrap();
        let empty = ParticlePopulation::new(0, 1, 10, vec![]).unwrap();
        assert_eq!(empirical_pairing(&empty, &f), (0.0, 0.0));
        let one = ParticlePopulation::new(0, 1, 10, vec![0.5]).unwrap();
        let v = f.eval(&[0.5]);
        let (a, b) = empirical_pairing(&one, &f);
        assert!((a - v / 10.0).abs() < 1e-15 && (b - v * v / 100.0).abs() < 1e-15);
        let two = ParticlePopulation::new(0, 1, 10, vec![0.5, -1.0]).unwrap();
        assert_eq!(empirical_pairing(&two, &Readout::constant(1.0)), (0.2, 0.04));
    }

    #[test]
    fn maximal_environment_doubles_every_epoch() {
        let n = 16;
        let cfg = BranchingConfig::from_point(n, Environment::Fixed(100.0), &[0.0], 3, 0.5).unwrap();
        let last = run(&cfg, &[0.5], 1).unwrap().pop().unwrap();
        assert_eq!(last.count(), 3 << 8);
    }

    #[test]
    fn tally_balances() {
        let cfg = BranchingConfig::from_point(50, zero_field(), &[0.0], 40, 1.0).unwrap();
        let mut r = rng::stream(4, &[]);
        let pop = cfg.initial_population();
        let (next, tally) = step_epoch(&pop, &cfg, &mut r).unwrap();
        assert_eq!(tally.splits + tally.deaths, 40);
        assert_eq!(next.count(), 2 * tally.splits);
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = BranchingConfig::from_point(4, Environment::Fixed(2.0), &[0.0], 1, 10.0)
            .unwrap()
            .with_cap(100);
        assert!(matches!(run(&cfg, &[10.0], 1), Err(Error::PopulationCap { .. })));
    }

    #[test]
    fn zero_horizon_returns_initial() {
        let cfg = BranchingConfig::from_point(10, zero_field(), &[0.0], 5, 0.0).unwrap();
        let snaps = run(&cfg, &[0.0], 9).unwrap();
        assert_eq!(snaps, vec![cfg.initial_population()]);
    }

    #[test]
    fn zero_readout_has_zero_residual() {
        let cfg = BranchingConfig::from_point(10, zero_field(), &[0.0], 10, 1.0).unwrap();
        let mut traj = Vec::new();
        run_observed(&cfg, 2, |p| traj.push(p.clone())).unwrap();
        let s = martingale_residual(&traj, &Readout::constant(0.0), cfg.environment()).unwrap();
        assert!(s.residual.iter().all(|&m| m == 0.0));
    }
}
