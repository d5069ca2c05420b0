//! Periodic lattice and the real-valued functions that live on it.
//!
//! Cell `i` along an axis sits at `-L/2 + i h` with `h = L / N`, so the
//! origin is always a lattice point when `N` is even. Integrals use the
//! rectangle rule `h^d * sum(values)` everywhere in the crate.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Torus<T> {
    dim: usize,
    cells: usize,
    extent: T,
}

impl<T: Scalar> Torus<T> {
    pub fn new(dim: usize, cells: usize, extent: T) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("must be 1, 2 or 3 (got {dim})")));
        }
        if cells < 2 {
            return Err(invalid("cells", "need at least two cells per axis"));
        }
        if !(extent > T::zero()) || !extent.is_finite() {
            return Err(invalid("extent", "must be positive and finite"));
        }
        Ok(Torus { dim, cells, extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn spacing(&self) -> T {
        self.extent / T::from_count(self.cells)
    }

    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> T {
        self.extent.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_coord(&self, i: usize) -> T {
        -self.extent / T::lit(2.0) + T::from_count(i) * self.spacing()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.cells;
            flat /= self.cells;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.cells + i)
    }

    /// Coordinates of cell `flat`.
    pub fn point(&self, flat: usize) -> Vec<T> {
        self.multi_index(flat)
            .into_iter()
            .map(|i| self.axis_coord(i))
            .collect()
    }

    /// Flat index of the cell containing `x` after wrapping onto the torus.
    pub fn locate(&self, x: &[T]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let h = self.spacing();
        let half = self.extent / T::lit(2.0);
        let n = self.cells as i64;
        let idx: Vec<usize> = x
            .iter()
            .map(|&xi| {
                let k = ((xi + half) / h).round().to_i64().unwrap_or(0);
                k.rem_euclid(n) as usize
            })
            .collect();
        Ok(self.flat_index(&idx))
    }

    /// Minimum-image displacement `x - y` on the torus.
    pub fn displacement(&self, x: &[T], y: &[T]) -> Vec<T> {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| {
                let d = a - b;
                d - self.extent * (d / self.extent).round()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    torus: Torus<T>,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(torus: Torus<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != torus.len() {
            return Err(Error::ShapeMismatch);
        }
        Ok(GridFunction { torus, values })
    }

    pub fn constant(torus: Torus<T>, c: T) -> Self {
        GridFunction {
            torus,
            values: vec![c; torus.len()],
        }
    }

    pub fn zeros(torus: Torus<T>) -> Self {
        Self::constant(torus, T::zero())
    }

    pub fn from_fn(torus: Torus<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..torus.len()).map(|i| f(&torus.point(i))).collect();
        GridFunction { torus, values }
    }

    pub fn torus(&self) -> &Torus<T> {
        &self.torus
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn integral(&self) -> T {
        self.torus.cell_volume() * self.values.iter().copied().sum::<T>()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| m.max(Float::abs(v)))
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_count(self.values.len())
    }

    pub fn at(&self, x: &[T]) -> Result<T> {
        Ok(self.values[self.torus.locate(x)?])
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.torus != other.torus {
            return Err(Error::ShapeMismatch);
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(GridFunction {
            torus: self.torus,
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridFunction {
            torus: self.torus,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// `sup |self - other|`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.sup_norm())
    }
}

use num_traits::Float;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_a_lattice_point() {
        let t = Torus::new(2, 8, 4.0).unwrap();
        let i = t.locate(&[0.0, 0.0]).unwrap();
        assert_eq!(t.point(i), vec![0.0, 0.0]);
        assert_eq!(t.len(), 64);
        assert_eq!(t.spacing(), 0.5);
    }

    #[test]
    fn locate_wraps_around() {
        let t = Torus::new(1, 8, 4.0).unwrap();
        assert_eq!(t.locate(&[2.0]).unwrap(), t.locate(&[-2.0]).unwrap());
        assert_eq!(t.locate(&[4.0 + 0.5]).unwrap(), t.locate(&[0.5]).unwrap());
    }

    #[test]
    fn integral_uses_rectangle_rule() {
        let t = Torus::new(3, 4, 2.0).unwrap();
        let f = GridFunction::constant(t, 3.0);
        assert!((f.integral() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = GridFunction::constant(Torus::new(1, 4, 1.0).unwrap(), 1.0);
        let b = GridFunction::constant(Torus::new(1, 8, 1.0).unwrap(), 1.0);
        assert_eq!(a.add(&b), Err(Error::ShapeMismatch));
    }

    #[test]
    fn minimum_image() {
        let t = Torus::new(1, 8, 4.0).unwrap();
        let d = t.displacement(&[1.8], &[-1.8]);
        assert!((d[0] + 0.4).abs() < 1e-12);
    }
}
