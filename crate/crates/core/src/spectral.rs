//! Lattice Fourier transform with the `h / sqrt(2 pi)` convention and the
//! free propagators `e^{ir Delta_h}` (lattice) and `e^{ir d^2/dx^2}`
//! (continuum) as diagonal multipliers.
//!
//! With `x_m = -L/2 + m h` and `xi_k = 2 pi k / L`,
//! `f^(xi_k) = h / sqrt(2 pi) * sum_m f(x_m) e^{-i x_m xi_k}
//!           = h / sqrt(2 pi) * (-1)^k * FFT(f)_k`.
//! Multipliers commute with the `(-1)^k` and scale factors, so propagation
//! works on the raw FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeField};

/// Fourier symbol of the Laplacian the dynamics use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    /// `-(4/h^2) sin^2(h xi / 2)`, the second difference.
    Lattice,
    /// `-xi^2`, the continuum Laplacian sampled on the grid.
    Continuum,
}

impl Symbol {
    #[inline]
    pub fn eval(self, xi: f64, h: f64) -> f64 {
        match self {
            Symbol::Lattice => {
                let s = (0.5 * h * xi).sin();
                -4.0 * s * s / (h * h)
            }
            Symbol::Continuum => -xi * xi,
        }
    }

    /// Symbol values in natural FFT order.
    pub fn table(self, lattice: &Lattice) -> Vec<f64> {
        (0..lattice.len())
            .map(|k| self.eval(lattice.frequency(k), lattice.spacing()))
            .collect()
    }
}

/// Laplacian symbol `sigma_h(xi) = -(4/h^2) sin^2(h xi / 2)` on the Brillouin zone.
pub fn discrete_symbol(xi: f64, h: f64) -> Result<f64> {
    let bound = PI / h;
    if !(xi.abs() <= bound * (1.0 + 1e-14)) {
        return Err(Error::OutsideBrillouinZone { xi, bound });
    }
    Ok(Symbol::Lattice.eval(xi, h))
}

/// Fourier coefficients `f^(xi_k)`, `k in [-n/2, n/2)`, of a lattice field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumField {
    lattice: Lattice,
    // natural FFT order
    coeffs: Vec<Complex64>,
}

impl SpectrumField {
    /// Builds a spectrum from coefficients listed in increasing frequency.
    pub fn from_ordered(lattice: Lattice, ordered: Vec<Complex64>) -> Result<Self> {
        let n = lattice.len();
        if ordered.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} coefficients, got {}",
                ordered.len()
            )));
        }
        let mut coeffs = ordered;
        coeffs.rotate_left(n / 2);
        Ok(Self { lattice, coeffs })
    }

    pub fn zeros(lattice: Lattice) -> Self {
        Self {
            lattice,
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Frequencies `xi_k` in increasing order.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.lattice.len() as i64;
        (-n / 2..n / 2)
            .map(|k| k as f64 * self.lattice.frequency_step())
            .collect()
    }

    /// Coefficients in increasing-frequency order.
    pub fn ordered(&self) -> Vec<Complex64> {
        let mut out = self.coeffs.clone();
        out.rotate_right(self.lattice.len() / 2);
        out
    }

    /// Coefficient at integer wavenumber `k` (`xi = 2 pi k / L`), taken mod `n`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.coeffs[k.rem_euclid(self.lattice.len() as i64) as usize]
    }

    pub fn set_coefficient(&mut self, k: i64, value: Complex64) {
        let n = self.lattice.len() as i64;
        self.coeffs[k.rem_euclid(n) as usize] = value;
    }

    /// `aF + bG`.
    pub fn combine(&self, a: Complex64, other: &SpectrumField, b: Complex64) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch {
                left: self.lattice.spacing(),
                left_n: self.lattice.len(),
                right: other.lattice.spacing(),
                right_n: other.lattice.len(),
            });
        }
        Ok(Self {
            lattice: self.lattice,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    /// `d xi * sum |f^|^2`, equal to `||f||^2_{L^2_h}`.
    pub fn energy(&self) -> f64 {
        self.lattice.frequency_step() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn sobolev_norm(&self, s: f64, homogeneous: bool) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let xi = self.lattice.frequency(k);
                let weight = if homogeneous {
                    if s == 0.0 {
                        1.0
                    } else {
                        xi.abs().powf(2.0 * s)
                    }
                } else {
                    (1.0 + xi * xi).powf(s)
                };
                if c.norm_sqr() == 0.0 {
                    0.0
                } else {
                    weight * c.norm_sqr()
                }
            })
            .sum();
        (self.lattice.frequency_step() * sum).sqrt()
    }

    /// Largest `|xi_k|` whose coefficient is at least `rel` times the peak.
    pub fn bandwidth(&self, rel: f64) -> f64 {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() >= rel * peak)
            .map(|(k, _)| self.lattice.frequency(k).abs())
            .fold(0.0, f64::max)
    }
}

/// Forward/inverse FFT plans for one grid size, shareable across threads.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Unnormalised forward transform.
    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
        let inv = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= inv);
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn dft(f: &LatticeField) -> SpectrumField {
    let lattice = *f.lattice();
    let fft = FftPair::new(lattice.len());
    let mut buf = f.values().to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.scratch_len()];
    fft.forward(&mut buf, &mut scratch);
    let scale = lattice.spacing() / (2.0 * PI).sqrt();
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= scale * sign(k);
    }
    SpectrumField {
        lattice,
        coeffs: buf,
    }
}

/// `f(x) = 1/sqrt(2 pi) * d xi * sum_k f^(xi_k) e^{i x xi_k}`.
pub fn idft(spectrum: &SpectrumField) -> LatticeField {
    let lattice = spectrum.lattice;
    let n = lattice.len();
    let fft = FftPair::new(n);
    let mut buf: Vec<Complex64> = spectrum
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * sign(k))
        .collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.scratch_len()];
    fft.inverse(&mut buf, &mut scratch);
    // inverse() already divided by n; restore d xi / sqrt(2 pi) * n
    let scale = lattice.frequency_step() / (2.0 * PI).sqrt() * n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    LatticeField::from_parts(lattice, buf)
}

/// `e^{i r sigma(xi_k)}` tabulated in natural FFT order.
pub fn multiplier_table(symbol_table: &[f64], r: f64) -> Vec<Complex64> {
    symbol_table
        .iter()
        .map(|&s| Complex64::from_polar(1.0, r * s))
        .collect()
}

/// Free propagator `e^{i r Delta}` for one grid, with its cached multipliers.
#[derive(Debug, Clone)]
pub struct Propagator {
    lattice: Lattice,
    symbol: Symbol,
    r: f64,
    multipliers: Vec<Complex64>,
    fft: FftPair,
}

impl Propagator {
    pub fn new(lattice: Lattice, symbol: Symbol, r: f64) -> Self {
        let table = symbol.table(&lattice);
        Self {
            lattice,
            symbol,
            r,
            multipliers: multiplier_table(&table, r),
            fft: FftPair::new(lattice.len()),
        }
    }

    pub fn time(&self) -> f64 {
        self.r
    }

    pub fn symbol(&self) -> Symbol {
        self.symbol
    }

    pub fn multipliers(&self) -> &[Complex64] {
        &self.multipliers
    }

    pub fn inverse(&self) -> Self {
        Self {
            lattice: self.lattice,
            symbol: self.symbol,
            r: -self.r,
            multipliers: self.multipliers.iter().map(|m| m.conj()).collect(),
            fft: self.fft.clone(),
        }
    }

    pub fn apply(&self, f: &LatticeField) -> Result<LatticeField> {
        if f.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch {
                left: f.lattice().spacing(),
                left_n: f.lattice().len(),
                right: self.lattice.spacing(),
                right_n: self.lattice.len(),
            });
        }
        let mut buf = f.values().to_vec();
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.scratch_len()];
        self.fft.forward(&mut buf, &mut scratch);
        for (c, m) in buf.iter_mut().zip(&self.multipliers) {
            *c *= m;
        }
        self.fft.inverse(&mut buf, &mut scratch);
        Ok(LatticeField::from_parts(self.lattice, buf))
    }
}

/// `e^{i r Delta} f` with the Laplacian selected by `symbol`.
pub fn propagate(f: &LatticeField, r: f64, symbol: Symbol) -> LatticeField {
    Propagator::new(*f.lattice(), symbol, r)
        .apply(f)
        .expect("propagator built on the field's own lattice")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_lattice;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(lattice: Lattice, rng: &mut ChaCha8Rng) -> LatticeField {
        let v = (0..lattice.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        LatticeField::new(lattice, v).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zero_transforms_to_zero() {
        let l = make_lattice(0.5, 8.0).unwrap();
        assert!(dft(&LatticeField::zeros(l)).ordered().iter().all(|c| c.norm() == 0.0));
        assert!(idft(&SpectrumField::zeros(l)).sup_norm() == 0.0);
    }

    #[test]
    fn constant_field_spectrum() {
        let l = make_lattice(1.0, 8.0).unwrap();
        let c = Complex64::new(0.7, -0.2);
        let s = dft(&LatticeField::constant(l, c));
        let want = c * 8.0 / (2.0 * PI).sqrt();
        assert!((s.coefficient(0) - want).norm() < 1e-14);
        assert!((8.0 / (2.0 * PI).sqrt() - 3.1915).abs() < 1e-4);
        for k in 1..8 {
            assert!(s.coefficient(k).norm() < 1e-14);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for h in [1.0, 0.5, 0.125] {
            let l = make_lattice(h, 16.0).unwrap();
            let f = random_field(l, &mut rng);
            let s = dft(&f);
            assert!(idft(&s).sub(&f).unwrap().sup_norm() < 1e-13);
            assert!(rel(s.energy(), f.l2_norm().powi(2)) < 1e-12);
            assert!(rel(f.hs_norm(0.0, false), f.l2_norm()) < 1e-12);
            assert!(rel(f.hs_norm(0.0, true), f.l2_norm()) < 1e-12);
        }
    }

    #[test]
    fn idft_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = make_lattice(0.5, 8.0).unwrap();
        let f = dft(&random_field(l, &mut rng));
        let g = dft(&random_field(l, &mut rng));
        let (a, b) = (Complex64::new(0.3, 1.1), Complex64::new(-2.0, 0.4));
        let lhs = idft(&f.combine(a, &g, b).unwrap());
        let rhs = idft(&f).combine(a, &idft(&g), b).unwrap();
        assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn ordering_is_monotone() {
        let l = make_lattice(1.0, 8.0).unwrap();
        let s = SpectrumField::zeros(l);
        let xi = s.frequencies();
        assert_eq!(xi.len(), 8);
        assert!(xi.windows(2).all(|w| w[1] > w[0]));
        assert!((xi[0] + PI).abs() < 1e-15);
        let ordered: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let s = SpectrumField::from_ordered(l, ordered.clone()).unwrap();
        assert_eq!(s.ordered(), ordered);
        assert_eq!(s.coefficient(-4), Complex64::new(0.0, 0.0));
        assert_eq!(s.coefficient(0), Complex64::new(4.0, 0.0));
    }

    #[test]
    fn discrete_symbol_examples() {
        assert_eq!(discrete_symbol(0.0, 1.0).unwrap(), 0.0);
        assert!((discrete_symbol(PI, 1.0).unwrap() + 4.0).abs() < 1e-14);
        assert!((discrete_symbol(PI, 0.5).unwrap() + 8.0).abs() < 1e-14);
        assert!((discrete_symbol(2.0 * PI, 0.5).unwrap() + 16.0).abs() < 1e-13);
        assert!(matches!(
            discrete_symbol(4.0, 1.0),
            Err(Error::OutsideBrillouinZone { .. })
        ));
    }

    #[test]
    fn discrete_symbol_tends_to_continuum() {
        let xi = 1.3;
        let errs: Vec<f64> = [0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|&h| (discrete_symbol(xi, h).unwrap() + xi * xi).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0] / 3.9));
    }

    #[test]
    fn symbol_matches_laplacian_stencil() {
        // Delta_h e^{i xi x} = sigma_h(xi) e^{i xi x}
        let l = make_lattice(0.5, 8.0).unwrap();
        for k in [-8i64, -3, 0, 1, 7] {
            let xi = k as f64 * l.frequency_step();
            let f = LatticeField::from_fn(l, |x| Complex64::from_polar(1.0, xi * x));
            let want = f.scale(discrete_symbol(xi, 0.5).unwrap().into());
            assert!(f.laplacian().sub(&want).unwrap().sup_norm() < 1e-12);
        }
    }

    #[test]
    fn propagate_identity_and_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = make_lattice(0.5, 8.0).unwrap();
        let f = random_field(l, &mut rng);
        assert!(propagate(&f, 0.0, Symbol::Lattice).sub(&f).unwrap().sup_norm() < 1e-14);
        let c = LatticeField::constant(l, Complex64::new(1.0, 2.0));
        for r in [-2.0, 0.3, 17.0] {
            for sym in [Symbol::Lattice, Symbol::Continuum] {
                assert!(propagate(&c, r, sym).sub(&c).unwrap().sup_norm() < 1e-13);
            }
        }
    }

    #[test]
    fn propagation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for h in [1.0, 0.25] {
            let l = make_lattice(h, 16.0).unwrap();
            for sym in [Symbol::Lattice, Symbol::Continuum] {
                let f = random_field(l, &mut rng);
                let (r, s) = (0.37, -1.21);
                let tf = propagate(&f, r, sym);
                assert!(rel(tf.l2_norm(), f.l2_norm()) < 1e-12);
                assert!(rel(tf.h1_norm(), f.h1_norm()) < 1e-12);
                let ts_tr = propagate(&tf, s, sym);
                let trs = propagate(&f, r + s, sym);
                assert!(ts_tr.sub(&trs).unwrap().l2_norm() < 1e-12 * f.l2_norm());
                let commuted = propagate(&f.forward_diff(), r, sym);
                assert!(tf.forward_diff().sub(&commuted).unwrap().l2_norm() < 1e-12 * commuted.l2_norm());
                let back = propagate(&tf, -r, sym);
                assert!(back.sub(&f).unwrap().l2_norm() < 1e-12 * f.l2_norm());
            }
        }
    }

    #[test]
    fn propagator_multipliers_are_unimodular() {
        let l = make_lattice(0.125, 16.0).unwrap();
        let p = Propagator::new(l, Symbol::Lattice, 3.3);
        assert!(p.multipliers().iter().all(|m| (m.norm() - 1.0).abs() < 1e-15));
        let inv = p.inverse();
        assert_eq!(inv.time(), -3.3);
    }

    #[test]
    fn delta_propagation_tends_to_continuum_symbol() {
        let r = 0.5;
        let diffs: Vec<f64> = [1.0, 0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|&h| {
                let l = make_lattice(h, 16.0).unwrap();
                let d = LatticeField::delta(l, 0.0, Complex64::new(1.0, 0.0));
                propagate(&d, r, Symbol::Lattice)
                    .sub(&propagate(&d, r, Symbol::Continuum))
                    .unwrap()
                    .l2_norm()
            })
            .collect();
        assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
    }
}
