//! Periodic lattices `x_m = -L/2 + m h`, complex fields on them, the
//! difference calculus, discrete norms and the transfer operators between
//! continuum functions and lattice fields.

mod datum;
mod transfer;

pub use datum::{InitialDatum, Pulse, SampledProfile, DECAY_TOLERANCE};
pub use transfer::{continuum_l2_distance, discretize, discretize_with, interpolate};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest point count `make_lattice` will hand out by default.
pub const DEFAULT_MAX_POINTS: usize = 1 << 22;

/// Periodic truncation of `hZ` with `n` points (a power of two) and period `L = n h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    h: f64,
    n: usize,
}

impl Lattice {
    pub fn new(h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidLattice(format!("spacing must be positive, got {h}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidLattice(format!(
                "point count must be a power of two >= 4, got {n}"
            )));
        }
        Ok(Self { h, n })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.h
    }

    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.n as f64 * self.h
    }

    #[inline]
    pub fn point(&self, m: usize) -> f64 {
        -0.5 * self.period() + m as f64 * self.h
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |m| self.point(m))
    }

    /// Frequency spacing `2 pi / L` of the dual grid.
    #[inline]
    pub fn frequency_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period()
    }

    /// Frequency of the coefficient stored at natural DFT index `idx`.
    #[inline]
    pub fn frequency(&self, idx: usize) -> f64 {
        let k = if idx < self.n / 2 {
            idx as f64
        } else {
            idx as f64 - self.n as f64
        };
        k * self.frequency_step()
    }

    /// Upper edge `pi / h` of the Brillouin zone.
    #[inline]
    pub fn brillouin_edge(&self) -> f64 {
        std::f64::consts::PI / self.h
    }

    fn ensure_same(&self, other: &Lattice) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                left: self.h,
                left_n: self.n,
                right: other.h,
                right_n: other.n,
            })
        }
    }
}

/// Smallest power-of-two lattice with spacing `h` covering `period_target`.
pub fn make_lattice(h: f64, period_target: f64) -> Result<Lattice> {
    make_lattice_capped(h, period_target, DEFAULT_MAX_POINTS)
}

pub fn make_lattice_capped(h: f64, period_target: f64, max_points: usize) -> Result<Lattice> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidSpacing(h));
    }
    if !(period_target >= 8.0 && period_target.is_finite()) {
        return Err(Error::InvalidLattice(format!(
            "target period must be at least 8, got {period_target}"
        )));
    }
    let mut n = 4usize;
    while (n as f64) * h < period_target {
        n = n.checked_mul(2).ok_or(Error::LatticeTooLarge {
            requested: usize::MAX,
            cap: max_points,
        })?;
        if n > max_points {
            return Err(Error::LatticeTooLarge {
                requested: n,
                cap: max_points,
            });
        }
    }
    Lattice::new(h, n)
}

/// Complex amplitudes on a [`Lattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    lattice: Lattice,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn new(lattice: Lattice, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { t: f64::NAN });
        }
        Ok(Self { lattice, values })
    }

    /// Callers guarantee the length; finiteness is not rechecked.
    pub(crate) fn from_parts(lattice: Lattice, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), lattice.len());
        Self { lattice, values }
    }

    pub fn zeros(lattice: Lattice) -> Self {
        Self::from_parts(lattice, vec![Complex64::new(0.0, 0.0); lattice.len()])
    }

    pub fn constant(lattice: Lattice, c: Complex64) -> Self {
        Self::from_parts(lattice, vec![c; lattice.len()])
    }

    /// Samples `f` at the lattice points.
    pub fn from_fn(lattice: Lattice, f: impl Fn(f64) -> Complex64) -> Self {
        Self::from_parts(lattice, lattice.points().map(f).collect())
    }

    /// Amplitude `a` at the lattice point nearest to `x0`, zero elsewhere.
    pub fn delta(lattice: Lattice, x0: f64, a: Complex64) -> Self {
        let mut out = Self::zeros(lattice);
        let m = ((x0 + 0.5 * lattice.period()) / lattice.spacing()).round() as i64;
        let m = m.rem_euclid(lattice.len() as i64) as usize;
        out.values[m] = a;
        out
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_parts(self.lattice, self.values.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|z| a * z)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &LatticeField, b: Complex64) -> Result<Self> {
        self.lattice.ensure_same(&other.lattice)?;
        Ok(Self::from_parts(
            self.lattice,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &LatticeField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// Cyclic shift by `sites` lattice points: `out(x) = self(x - sites h)`.
    pub fn shifted(&self, sites: i64) -> Self {
        let n = self.lattice.len() as i64;
        let values = (0..n)
            .map(|m| self.values[(m - sites).rem_euclid(n) as usize])
            .collect();
        Self::from_parts(self.lattice, values)
    }

    /// `||f||_{L^p_h} = (h sum |f|^p)^{1/p}`, the supremum for `p = inf`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(format!("L^p norm needs p >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.values.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        let sum: f64 = if p == 2.0 {
            self.values.iter().map(|z| z.norm_sqr()).sum()
        } else {
            self.values.iter().map(|z| z.norm().powf(p)).sum()
        };
        Ok((self.lattice.spacing() * sum).powf(1.0 / p))
    }

    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (self.lattice.spacing() * sum).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `<f, g> = h sum f conj(g)`.
    pub fn inner_product(&self, other: &LatticeField) -> Result<Complex64> {
        self.lattice.ensure_same(&other.lattice)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(f, g)| f * g.conj())
            .sum();
        Ok(sum * self.lattice.spacing())
    }

    /// `(f(x+h) - f(x)) / h` with periodic wrap.
    pub fn forward_diff(&self) -> Self {
        let n = self.values.len();
        let inv_h = 1.0 / self.lattice.spacing();
        let values = (0..n)
            .map(|m| (self.values[(m + 1) % n] - self.values[m]) * inv_h)
            .collect();
        Self::from_parts(self.lattice, values)
    }

    /// `(f(x) - f(x-h)) / h` with periodic wrap.
    pub fn backward_diff(&self) -> Self {
        let n = self.values.len();
        let inv_h = 1.0 / self.lattice.spacing();
        let values = (0..n)
            .map(|m| (self.values[m] - self.values[(m + n - 1) % n]) * inv_h)
            .collect();
        Self::from_parts(self.lattice, values)
    }

    /// Second difference `(f(x+h) + f(x-h) - 2 f(x)) / h^2`.
    pub fn laplacian(&self) -> Self {
        let n = self.values.len();
        let inv_h2 = 1.0 / (self.lattice.spacing() * self.lattice.spacing());
        let values = (0..n)
            .map(|m| {
                (self.values[(m + 1) % n] + self.values[(m + n - 1) % n] - 2.0 * self.values[m])
                    * inv_h2
            })
            .collect();
        Self::from_parts(self.lattice, values)
    }

    /// Spectral Sobolev norm over the Brillouin zone with weight
    /// `(1 + xi^2)^s`, or `|xi|^{2s}` when `homogeneous`.
    pub fn hs_norm(&self, s: f64, homogeneous: bool) -> f64 {
        let spectrum = crate::spectral::dft(self);
        spectrum.sobolev_norm(s, homogeneous)
    }

    /// `||f||_{H^1_h}` with the inhomogeneous spectral weight.
    pub fn h1_norm(&self) -> f64 {
        self.hs_norm(1.0, false)
    }
}

/// A function on the line represented by its samples on a fine periodic grid.
///
/// Used as the stand-in for continuum solutions; the grid shares its period
/// with every lattice it is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumField(LatticeField);

impl ContinuumField {
    pub fn from_samples(field: LatticeField) -> Self {
        Self(field)
    }

    pub fn sample(grid: Lattice, f: impl Fn(f64) -> Complex64) -> Self {
        Self(LatticeField::from_fn(grid, f))
    }

    pub fn grid(&self) -> &Lattice {
        self.0.lattice()
    }

    pub fn values(&self) -> &[Complex64] {
        self.0.values()
    }

    pub fn as_samples(&self) -> &LatticeField {
        &self.0
    }

    pub fn into_samples(self) -> LatticeField {
        self.0
    }

    /// Rectangle-rule L^2 norm on the sample grid.
    pub fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }
}
