//! Heat semigroup on the periodic lattice.
//!
//! The flow is applied spectrally with the multiplier of the lattice
//! generator `Δ_h / 2`, i.e. `exp(-t (2/h²) sin²(π m / N))` per axis. This
//! is the transition semigroup of a continuous-time random walk, so it
//! conserves mass, composes exactly and maps non-negative data to
//! non-negative data; it converges to the Gaussian heat flow at rate `h²`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::{GridFunction, Torus};
use crate::error::{Error, Result};
use crate::Scalar;

/// Per-axis spectral factors for one fixed time `t`, already divided by
/// `N` to undo the unnormalized inverse transform.
#[derive(Debug, Clone)]
pub struct HeatMultiplier<T> {
    factors: Vec<T>,
    identity: bool,
}

pub struct HeatSemigroup<T: Scalar> {
    torus: Torus<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    symbol: Vec<T>,
}

/// Reusable work buffers for [`HeatSemigroup::apply_in_place`].
pub struct HeatScratch<T> {
    buffer: Vec<Complex<T>>,
    line: Vec<Complex<T>>,
    fft: Vec<Complex<T>>,
}

impl<T: Scalar> HeatSemigroup<T> {
    pub fn new(torus: Torus<T>) -> Self {
        let n = torus.cells();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let h = torus.spacing();
        let two_over_h2 = T::lit(2.0) / (h * h);
        let symbol = (0..n)
            .map(|m| {
                let s = (T::PI() * T::from_count(m) / T::from_count(n)).sin();
                two_over_h2 * s * s
            })
            .collect();
        HeatSemigroup {
            torus,
            forward,
            inverse,
            symbol,
        }
    }

    pub fn torus(&self) -> &Torus<T> {
        &self.torus
    }

    pub fn multiplier(&self, t: T) -> HeatMultiplier<T> {
        let inv_n = T::one() / T::from_count(self.torus.cells());
        HeatMultiplier {
            factors: self.symbol.iter().map(|&s| (-t * s).exp() * inv_n).collect(),
            identity: t == T::zero(),
        }
    }

    pub fn scratch(&self) -> HeatScratch<T> {
        let n = self.torus.cells();
        HeatScratch {
            buffer: vec![Complex::default(); self.torus.len()],
            line: vec![Complex::default(); n],
            fft: vec![
                Complex::default();
                self.forward
                    .get_inplace_scratch_len()
                    .max(self.inverse.get_inplace_scratch_len())
            ],
        }
    }

    /// Applies the flow to raw cell values.
    pub fn apply_in_place(
        &self,
        values: &mut [T],
        mult: &HeatMultiplier<T>,
        scratch: &mut HeatScratch<T>,
    ) {
        if mult.identity {
            return;
        }
        let n = self.torus.cells();
        let dim = self.torus.dim();
        let total = values.len();
        for (b, &v) in scratch.buffer.iter_mut().zip(values.iter()) {
            *b = Complex::new(v, T::zero());
        }
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = n * stride;
            for base in (0..total).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for k in 0..n {
                        scratch.line[k] = scratch.buffer[start + k * stride];
                    }
                    self.forward
                        .process_with_scratch(&mut scratch.line, &mut scratch.fft);
                    for (c, &f) in scratch.line.iter_mut().zip(&mult.factors) {
                        *c = *c * f;
                    }
                    self.inverse
                        .process_with_scratch(&mut scratch.line, &mut scratch.fft);
                    for k in 0..n {
                        scratch.buffer[start + k * stride] = scratch.line[k];
                    }
                }
            }
        }
        for (v, b) in values.iter_mut().zip(&scratch.buffer) {
            *v = b.re;
        }
    }

    /// Like [`apply_in_place`](Self::apply_in_place), then clears the
    /// rounding-level negatives the transform leaves behind. Only valid
    /// for non-negative input.
    pub fn apply_nonneg_in_place(
        &self,
        values: &mut [T],
        mult: &HeatMultiplier<T>,
        scratch: &mut HeatScratch<T>,
    ) {
        self.apply_in_place(values, mult, scratch);
        for v in values.iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
    }

    /// `P_t f`. `t = 0` returns the input unchanged.
    pub fn apply(&self, f: &GridFunction<T>, t: T) -> Result<GridFunction<T>> {
        if f.torus() != &self.torus {
            return Err(Error::ShapeMismatch);
        }
        if t < T::zero() {
            return Err(crate::error::invalid("t", "must be non-negative"));
        }
        let mut out = f.clone();
        let mult = self.multiplier(t);
        let mut scratch = self.scratch();
        if f.min() >= T::zero() {
            self.apply_nonneg_in_place(out.values_mut(), &mult, &mut scratch);
        } else {
            self.apply_in_place(out.values_mut(), &mult, &mut scratch);
        }
        Ok(out)
    }
}

/// One-shot convenience around [`HeatSemigroup`].
pub fn apply_heat_semigroup<T: Scalar>(f: &GridFunction<T>, t: T) -> Result<GridFunction<T>> {
    HeatSemigroup::new(*f.torus()).apply(f, t)
}
