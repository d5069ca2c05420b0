//! Spatial correlation kernels and samplers for the Gaussian noise they
//! define.
//!
//! On the torus every non-constant kernel is periodized over the nearest
//! images (`k ∈ {-1, 0, 1}^d` box shifts), which keeps stationary positive
//! definite kernels positive definite on the lattice.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::heatkernel::{Radial, Torus};
use crate::{rng, Scalar};

/// Shape `Θ` of a scaled kernel `a Θ(x - y)`, normalized so `Θ(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThetaProfile {
    /// `exp(-|x|²)`.
    Gaussian,
    /// `Θ ≡ 1`: a single spatially constant field.
    Flat,
}

impl ThetaProfile {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(ThetaProfile::Gaussian),
            "flat" => Ok(ThetaProfile::Flat),
            other => Err(invalid("profile", format!("unknown profile `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ThetaProfile::Gaussian => "gaussian",
            ThetaProfile::Flat => "flat",
        }
    }

    #[inline]
    pub fn at_r2<T: Scalar>(&self, r2: T) -> T {
        match self {
            ThetaProfile::Gaussian => (-r2).exp(),
            ThetaProfile::Flat => T::one(),
        }
    }
}

/// Radial profile sampled at increasing radii, linearly interpolated and
/// held constant outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialTable<T> {
    radii: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> RadialTable<T> {
    pub fn new(radii: Vec<T>, values: Vec<T>) -> Result<Self> {
        if radii.len() != values.len() || radii.is_empty() {
            return Err(invalid("table", "need matching, non-empty radius and value columns"));
        }
        if radii[0] < T::zero() || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("table", "radii must be non-negative and strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(invalid("table", "values must be finite and non-negative"));
        }
        Ok(RadialTable { radii, values })
    }

    /// Two whitespace-separated columns `radius value`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| invalid("table", format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 2 {
                return Err(invalid("table", format!("line {}: expected two columns", lineno + 1)));
            }
            radii.push(T::lit(cols[0]));
            values.push(T::lit(cols[1]));
        }
        Self::new(radii, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn at(&self, r: T) -> T {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.radii.partition_point(|&x| x <= r);
        let lo = hi - 1;
        let w = (r - self.radii[lo]) / (self.radii[hi] - self.radii[lo]);
        self.values[lo] + w * (self.values[hi] - self.values[lo])
    }

    fn max(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum KernelVariant<T> {
    Constant { c: T },
    /// `ε / (1 + |x - y|^α)`.
    StationaryPower { eps: T, alpha: T },
    /// `a Θ(x - y)`.
    ScaledTheta { a: T, profile: ThetaProfile },
    IndicatorBall { radius: T, height: T },
    Tabulated(RadialTable<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceKernel<T> {
    dim: usize,
    variant: KernelVariant<T>,
}

fn positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be positive and finite"))
    }
}

impl<T: Scalar> CovarianceKernel<T> {
    pub fn new(dim: usize, variant: KernelVariant<T>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        match &variant {
            KernelVariant::Constant { c } => {
                if !(*c >= T::zero()) || !c.is_finite() {
                    return Err(invalid("c", "must be non-negative and finite"));
                }
            }
            KernelVariant::StationaryPower { eps, alpha } => {
                positive("eps", *eps)?;
                positive("alpha", *alpha)?;
            }
            KernelVariant::ScaledTheta { a, .. } => {
                if !(*a >= T::zero()) || !a.is_finite() {
                    return Err(invalid("a", "must be non-negative and finite"));
                }
            }
            KernelVariant::IndicatorBall { radius, height } => {
                positive("radius", *radius)?;
                positive("height", *height)?;
            }
            KernelVariant::Tabulated(_) => {}
        }
        Ok(CovarianceKernel { dim, variant })
    }

    pub fn constant(dim: usize, c: T) -> Result<Self> {
        Self::new(dim, KernelVariant::Constant { c })
    }

    pub fn stationary_power(dim: usize, eps: T, alpha: T) -> Result<Self> {
        Self::new(dim, KernelVariant::StationaryPower { eps, alpha })
    }

    pub fn scaled_theta(dim: usize, a: T, profile: ThetaProfile) -> Result<Self> {
        Self::new(dim, KernelVariant::ScaledTheta { a, profile })
    }

    pub fn indicator_ball(dim: usize, radius: T, height: T) -> Result<Self> {
        Self::new(dim, KernelVariant::IndicatorBall { radius, height })
    }

    pub fn tabulated(dim: usize, table: RadialTable<T>) -> Result<Self> {
        Self::new(dim, KernelVariant::Tabulated(table))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> &KernelVariant<T> {
        &self.variant
    }

    /// Known upper bound on `|C|`.
    pub fn sup_bound(&self) -> T {
        match &self.variant {
            KernelVariant::Constant { c } => *c,
            KernelVariant::StationaryPower { eps, .. } => *eps,
            KernelVariant::ScaledTheta { a, .. } => *a,
            KernelVariant::IndicatorBall { height, .. } => *height,
            KernelVariant::Tabulated(t) => t.max(),
        }
    }

    /// `(a, Θ)` for scaled kernels.
    pub fn as_scaled_theta(&self) -> Option<(T, ThetaProfile)> {
        match self.variant {
            KernelVariant::ScaledTheta { a, profile } => Some((a, profile)),
            _ => None,
        }
    }

    /// Value of a spatially constant kernel, including `a Θ` with the flat
    /// profile.
    pub fn as_constant(&self) -> Option<T> {
        match self.variant {
            KernelVariant::Constant { c } => Some(c),
            KernelVariant::ScaledTheta {
                a,
                profile: ThetaProfile::Flat,
            } => Some(a),
            _ => None,
        }
    }

    /// Limit of the kernel at infinite separation.
    fn far_field(&self) -> T {
        match &self.variant {
            KernelVariant::Constant { c } => *c,
            KernelVariant::ScaledTheta { a, profile } => *a * profile.at_r2(T::lit(f64::INFINITY)),
            KernelVariant::Tabulated(t) => t.values.last().copied().unwrap_or(T::zero()),
            _ => T::zero(),
        }
    }

    /// Value at squared separation `r2`.
    #[inline]
    pub fn at_r2(&self, r2: T) -> T {
        match &self.variant {
            KernelVariant::Constant { c } => *c,
            KernelVariant::StationaryPower { eps, alpha } => {
                *eps / (T::one() + r2.powf(*alpha / T::lit(2.0)))
            }
            KernelVariant::ScaledTheta { a, profile } => *a * profile.at_r2(r2),
            KernelVariant::IndicatorBall { radius, height } => {
                if r2 <= *radius * *radius {
                    *height
                } else {
                    T::zero()
                }
            }
            KernelVariant::Tabulated(t) => t.at(r2.sqrt()),
        }
    }

    /// `C(x, y)`.
    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        for p in [x, y] {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: p.len(),
                });
            }
        }
        Ok(self.at_r2(crate::dist2(x, y)))
    }

    /// Kernel of the periodized field on `torus` between two points.
    ///
    /// The decaying part `k - k(∞)` is summed over the `3^d` nearest images
    /// and the far-field value is added once.
    pub fn periodic(&self, torus: &Torus<T>, x: &[T], y: &[T]) -> T {
        if let Some(c) = self.as_constant() {
            return c;
        }
        let far = self.far_field();
        let disp = torus.displacement(x, y);
        let d = disp.len();
        let l = torus.extent();
        let mut total = T::zero();
        for img in 0..3usize.pow(d as u32) {
            let mut code = img;
            let mut r2 = T::zero();
            for &dx in &disp {
                let shift = T::from_count(code % 3) - T::one();
                code /= 3;
                let z = dx + shift * l;
                r2 = r2 + z * z;
            }
            total = total + self.at_r2(r2) - far;
        }
        total + far
    }
}

impl<T: Scalar> Radial<T> for CovarianceKernel<T> {
    fn at(&self, r: T) -> T {
        self.at_r2(r * r)
    }

    fn breakpoints(&self) -> Vec<T> {
        match &self.variant {
            KernelVariant::IndicatorBall { radius, .. } => vec![*radius],
            KernelVariant::Tabulated(t) => t.radii().to_vec(),
            _ => Vec::new(),
        }
    }

    fn support(&self) -> Option<T> {
        match &self.variant {
            KernelVariant::IndicatorBall { radius, .. } => Some(*radius),
            KernelVariant::Constant { c } if *c == T::zero() => Some(T::zero()),
            KernelVariant::ScaledTheta { a, .. } if *a == T::zero() => Some(T::zero()),
            _ => None,
        }
    }

    fn non_increasing(&self) -> bool {
        match &self.variant {
            KernelVariant::Tabulated(t) => t.values.windows(2).all(|w| w[1] <= w[0]),
            _ => true,
        }
    }
}

/// Square-root factor `L` (cells × rank) with `L Lᵀ ≈ [C(x_i, x_j)]`.
#[derive(Debug, Clone)]
pub struct GridFactor<T> {
    torus: Torus<T>,
    kernel: CovarianceKernel<T>,
    columns: Vec<Vec<T>>,
    variance: Vec<T>,
    jitter: T,
}

/// One draw of the field increment over a time step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement<T> {
    pub torus: Torus<T>,
    pub dt: T,
    pub values: Vec<T>,
}

/// Relative threshold on the residual diagonal at which pivoting stops.
const RANK_TOL: f64 = 1e-13;
/// Largest admissible entry of `C - L Lᵀ`, relative to the sup bound.
const RESIDUAL_TOL: f64 = 1e-8;
const JITTER: f64 = 1e-10;
/// Above this size the residual is checked on a deterministic sample.
const FULL_CHECK_MAX: usize = 1024;

struct Factorization {
    columns: Vec<Vec<f64>>,
}

fn pivoted_cholesky(
    n: usize,
    entry: &dyn Fn(usize, usize) -> f64,
    jitter: f64,
    scale: f64,
) -> Factorization {
    let mut resid: Vec<f64> = (0..n).map(|i| entry(i, i) + jitter).collect();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let stop = RANK_TOL * scale;
    while columns.len() < n {
        let (p, &dp) = resid
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        if dp <= stop {
            break;
        }
        let root = dp.sqrt();
        let mut col: Vec<f64> = (0..n).map(|i| entry(i, p)).collect();
        for prev in &columns {
            let lp = prev[p];
            if lp != 0.0 {
                for (c, &l) in col.iter_mut().zip(prev) {
                    *c -= l * lp;
                }
            }
        }
        col[p] = dp;
        for c in col.iter_mut() {
            *c /= root;
        }
        for &q in &pivots {
            col[q] = 0.0;
        }
        for (r, &c) in resid.iter_mut().zip(&col) {
            *r -= c * c;
        }
        resid[p] = 0.0;
        pivots.push(p);
        columns.push(col);
    }
    Factorization { columns }
}

fn max_residual(
    n: usize,
    entry: &dyn Fn(usize, usize) -> f64,
    jitter: f64,
    columns: &[Vec<f64>],
) -> f64 {
    let value = |i: usize, j: usize| {
        let target = entry(i, j) + if i == j { jitter } else { 0.0 };
        let approx: f64 = columns.iter().map(|c| c[i] * c[j]).sum();
        (target - approx).abs()
    };
    if n <= FULL_CHECK_MAX {
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max(value(i, j));
            }
        }
        worst
    } else {
        let mut r = rng::stream(0x5eed, &[n as u64]);
        let mut worst = (0..n).map(|i| value(i, i)).fold(0.0, f64::max);
        for _ in 0..100_000 {
            let i = r.random_range(0..n);
            let j = r.random_range(0..n);
            worst = worst.max(value(i, j));
        }
        worst
    }
}

fn min_eigenvalue(n: usize, entry: &dyn Fn(usize, usize) -> f64) -> f64 {
    if n > 2048 {
        return f64::NAN;
    }
    let m = DMatrix::from_fn(n, n, entry);
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Factorizes `[C(x_i, x_j)]` with the PSD repair policy: plain attempt,
/// one retry with `1e-10 · sup` diagonal jitter, then failure.
///
/// `eps` is the machine epsilon of the scalar the entries were computed
/// in; for `f32` the jitter and the residual tolerance are raised to a few
/// ulps so rounding in the entries is not reported as indefiniteness.
fn factor_matrix(
    n: usize,
    entry: &dyn Fn(usize, usize) -> f64,
    scale: f64,
    eps: f64,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if scale == 0.0 {
        return Ok((Vec::new(), 0.0));
    }
    let tol = RESIDUAL_TOL.max(100.0 * eps) * scale;
    for jitter in [0.0, JITTER.max(10.0 * eps) * scale] {
        let f = pivoted_cholesky(n, entry, jitter, scale);
        if max_residual(n, entry, jitter, &f.columns) <= tol {
            return Ok((f.columns, jitter));
        }
    }
    Err(Error::Indefinite {
        min_eigenvalue: min_eigenvalue(n, entry),
    })
}

/// Factor of the periodized kernel matrix over all cells of `torus`.
pub fn grid_covariance_factor<T: Scalar>(
    kernel: &CovarianceKernel<T>,
    torus: &Torus<T>,
) -> Result<GridFactor<T>> {
    if kernel.dim() != torus.dim() {
        return Err(Error::DimensionMismatch {
            expected: torus.dim(),
            got: kernel.dim(),
        });
    }
    let n = torus.len();
    let points: Vec<Vec<T>> = (0..n).map(|i| torus.point(i)).collect();
    let columns: Vec<Vec<T>>;
    let jitter: f64;
    if let Some(c) = kernel.as_constant() {
        // Rank one: every cell sees the same value.
        columns = if c > T::zero() {
            vec![vec![c.sqrt(); n]]
        } else {
            Vec::new()
        };
        jitter = 0.0;
    } else {
        let entry = |i: usize, j: usize| kernel.periodic(torus, &points[i], &points[j]).as_f64();
        let scale = (0..n).map(|i| entry(i, i)).fold(0.0, f64::max);
        let (cols, j) = factor_matrix(n, &entry, scale, T::epsilon().as_f64())?;
        columns = cols
            .into_iter()
            .map(|c| c.into_iter().map(T::lit).collect())
            .collect();
        jitter = j;
    }
    let mut variance = vec![T::zero(); n];
    for col in &columns {
        for (v, &l) in variance.iter_mut().zip(col) {
            *v = *v + l * l;
        }
    }
    Ok(GridFactor {
        torus: *torus,
        kernel: kernel.clone(),
        columns,
        variance,
        jitter: T::lit(jitter),
    })
}

impl<T: Scalar> GridFactor<T> {
    pub fn torus(&self) -> &Torus<T> {
        &self.torus
    }

    pub fn kernel(&self) -> &CovarianceKernel<T> {
        &self.kernel
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// Diagonal jitter that was needed, zero when none.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Per-cell variance `(L Lᵀ)_ii` of a unit-time draw.
    pub fn variance(&self) -> &[T] {
        &self.variance
    }

    /// `(L Lᵀ)_ij`.
    pub fn covariance(&self, i: usize, j: usize) -> T {
        self.columns
            .iter()
            .fold(T::zero(), |acc, c| acc + c[i] * c[j])
    }

    /// Writes `sqrt(scale) · L z` into `out` for fresh standard normals `z`.
    pub fn sample_into<R: Rng + ?Sized>(&self, scale: T, rng: &mut R, out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        let s = scale.sqrt();
        for col in &self.columns {
            let z = rng::normal::<T, _>(rng) * s;
            for (o, &l) in out.iter_mut().zip(col) {
                *o = *o + z * l;
            }
        }
    }

    /// Gaussian increment with covariance `C · dt`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: T, rng: &mut R) -> Result<NoiseIncrement<T>> {
        if !(dt > T::zero()) {
            return Err(invalid("dt", "must be positive"));
        }
        let mut values = vec![T::zero(); self.torus.len()];
        self.sample_into(dt, rng, &mut values);
        Ok(NoiseIncrement {
            torus: self.torus,
            dt,
            values,
        })
    }
}

/// Exact joint draw of the unit-time field at arbitrary points.
///
/// Coincident points share a single value. `points` is flat, `dim`
/// coordinates per point; the result has one value per point.
pub fn sample_at_points<T: Scalar, R: Rng + ?Sized>(
    kernel: &CovarianceKernel<T>,
    points: &[T],
    scale: T,
    rng: &mut R,
) -> Result<Vec<T>> {
    let d = kernel.dim();
    if points.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: points.len() % d,
        });
    }
    let k = points.len() / d;
    if let Some(c) = kernel.as_constant() {
        let v = rng::normal::<T, _>(rng) * (c * scale).sqrt();
        return Ok(vec![v; k]);
    }
    let mut slot = Vec::with_capacity(k);
    let mut unique: Vec<&[T]> = Vec::new();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for p in points.chunks(d) {
        let key: Vec<u64> = p.iter().map(|v| v.as_f64().to_bits()).collect();
        let idx = *seen.entry(key).or_insert_with(|| {
            unique.push(p);
            unique.len() - 1
        });
        slot.push(idx);
    }
    let m = unique.len();
    let entry = |i: usize, j: usize| kernel.at_r2(crate::dist2(unique[i], unique[j])).as_f64();
    let (columns, _) = factor_matrix(m, &entry, kernel.sup_bound().as_f64(), T::epsilon().as_f64())?;
    let s = scale.as_f64().sqrt();
    let mut values = vec![0.0; m];
    for col in &columns {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        for (v, &l) in values.iter_mut().zip(col) {
            *v += z * l * s;
        }
    }
    Ok(slot.into_iter().map(|i| T::lit(values[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_kernel_by_hand() {
        let k = CovarianceKernel::<f64>::stationary_power(1, 0.1, 3.0).unwrap();
        assert!((k.eval(&[0.0_f64], &[1.0]).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn scaled_theta_diagonal_is_exact() {
        let k = CovarianceKernel::scaled_theta(2, 4.0, ThetaProfile::Gaussian).unwrap();
        assert_eq!(k.eval(&[0.3, -1.2], &[0.3, -1.2]).unwrap(), 4.0);
    }

    #[test]
    fn dimension_is_checked() {
        let k = CovarianceKernel::constant(2, 1.0).unwrap();
        assert!(matches!(k.eval(&[0.0], &[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn constant_two_cells_factor_is_rank_one() {
        let t = Torus::new(1, 2, 1.0_f64).unwrap();
        let k = CovarianceKernel::constant(1, 1.0).unwrap();
        let f = grid_covariance_factor(&k, &t).unwrap();
        assert_eq!(f.rank(), 1);
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            assert!((f.covariance(i, j) - 1.0).abs() < 1e-15);
        }
        let mut r = rng::stream(3, &[]);
        let inc = f.sample_increment(0.5, &mut r).unwrap();
        assert_eq!(inc.values[0], inc.values[1]);
    }

    #[test]
    fn zero_kernel_gives_zero_samples() {
        let t = Torus::new(1, 8, 4.0).unwrap();
        let k = CovarianceKernel::constant(1, 0.0).unwrap();
        let f = grid_covariance_factor(&k, &t).unwrap();
        let mut r = rng::stream(1, &[]);
        assert!(f.sample_increment(1.0, &mut r).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn collinear_points_reconstruct() {
        let k = CovarianceKernel::scaled_theta(2, 1.0, ThetaProfile::Gaussian).unwrap();
        let pts: [[f64; 2]; 3] = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]];
        let entry = |i: usize, j: usize| k.eval(&pts[i], &pts[j]).unwrap();
        let (cols, jitter) = factor_matrix(3, &entry, 1.0, f64::EPSILON).unwrap();
        assert_eq!(jitter, 0.0);
        assert!(max_residual(3, &entry, 0.0, &cols) < 1e-10);
    }

    #[test]
    fn indicator_is_rejected_with_diagnostic() {
        let t = Torus::new(1, 32, 8.0).unwrap();
        let k = CovarianceKernel::indicator_ball(1, 1.0, 1.0).unwrap();
        match grid_covariance_factor(&k, &t) {
            Err(Error::Indefinite { min_eigenvalue }) => assert!(min_eigenvalue < 0.0),
            other => panic!("expected indefinite, got {other:?}"),
        }
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let t = RadialTable::<f64>::parse("# r g\n0 1\n1 0.5\n2 0\n").unwrap();
        assert_eq!(t.at(0.5), 0.75);
        assert_eq!(t.at(5.0), 0.0);
        assert_eq!(t.at(-1.0), 1.0);
        assert!(RadialTable::<f64>::parse("0 1\n0 2\n").is_err());
    }

    #[test]
    fn coincident_points_share_a_value() {
        let k = CovarianceKernel::scaled_theta(1, 1.0, ThetaProfile::Gaussian).unwrap();
        let mut r = rng::stream(9, &[]);
        let v = sample_at_points(&k, &[0.0, 1.0, 0.0], 1.0, &mut r).unwrap();
        assert_eq!(v[0], v[2]);
        assert_ne!(v[0], v[1]);
    }
}
