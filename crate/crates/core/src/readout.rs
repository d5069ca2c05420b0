//! Test functions `f` paired against measures and solutions.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::heatkernel::{GridFunction, Torus};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Readout<T> {
    /// `exp(-|x - c|² / (2 w²))`.
    GaussianBump { center: Vec<T>, width: T },
    IndicatorBall { center: Vec<T>, radius: T },
    Constant { value: T },
}

impl<T: Scalar> Readout<T> {
    pub fn gaussian_bump(center: Vec<T>, width: T) -> Result<Self> {
        if !(width > T::zero()) {
            return Err(invalid("width", "must be positive"));
        }
        Ok(Readout::GaussianBump { center, width })
    }

    pub fn indicator_ball(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(invalid("radius", "must be positive"));
        }
        Ok(Readout::IndicatorBall { center, radius })
    }

    pub fn constant(value: T) -> Self {
        Readout::Constant { value }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Readout::GaussianBump { .. } => "gaussian_bump",
            Readout::IndicatorBall { .. } => "indicator_ball",
            Readout::Constant { .. } => "constant",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Readout::Constant { value } if *value == T::zero())
    }

    pub fn eval(&self, x: &[T]) -> T {
        match self {
            Readout::GaussianBump { center, width } => {
                (-crate::dist2(x, center) / (T::lit(2.0) * *width * *width)).exp()
            }
            Readout::IndicatorBall { center, radius } => {
                if crate::dist2(x, center) <= *radius * *radius {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Readout::Constant { value } => *value,
        }
    }

    /// `Δf(x)`; the indicator has none.
    pub fn laplacian(&self, x: &[T]) -> Result<T> {
        match self {
            Readout::GaussianBump { width, center } => {
                let w2 = *width * *width;
                let d = T::from_count(x.len());
                Ok(self.eval(x) * (crate::dist2(x, center) / (w2 * w2) - d / w2))
            }
            Readout::IndicatorBall { .. } => Err(invalid(
                "readout",
                "indicator_ball is not twice differentiable",
            )),
            Readout::Constant { .. } => Ok(T::zero()),
        }
    }

    /// `P_t f(x)` in closed form, where one exists.
    pub fn heat_smoothed(&self, t: T, x: &[T]) -> Result<T> {
        match self {
            Readout::GaussianBump { center, width } => {
                let w2 = *width * *width;
                let v = w2 + t;
                let d = T::from_count(x.len());
                Ok((w2 / v).powf(d / T::lit(2.0))
                    * (-crate::dist2(x, center) / (T::lit(2.0) * v)).exp())
            }
            Readout::Constant { value } => Ok(*value),
            Readout::IndicatorBall { .. } => Err(invalid(
                "readout",
                "no closed-form heat flow for indicator_ball",
            )),
        }
    }

    pub fn on(&self, torus: Torus<T>) -> GridFunction<T> {
        GridFunction::from_fn(torus, |x| self.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_bump_matches_finite_difference() {
        let f = Readout::<f64>::gaussian_bump(vec![0.2, -0.1], 0.7).unwrap();
        let x = [0.5, 0.3];
        let h = 1e-4;
        let mut fd = -4.0 * f.eval(&x);
        for k in 0..2 {
            for s in [-h, h] {
                let mut y = x;
                y[k] += s;
                fd += f.eval(&y);
            }
        }
        fd /= h * h;
        assert!((fd - f.laplacian(&x).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn indicator_has_no_laplacian() {
        let f = Readout::indicator_ball(vec![0.0], 1.0).unwrap();
        assert_eq!(f.eval(&[0.5]), 1.0);
        assert!(f.laplacian(&[0.5]).is_err());
    }
}
