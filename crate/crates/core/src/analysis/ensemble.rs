use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{make_lattice, Lattice, LatticeField};
use crate::spectral::{idft, SpectrumField};

/// `T(x) = (d xi / sqrt(2 pi)) sum_k c_k e^{i xi_k x}` on a torus of period
/// `L`, with `xi_k = 2 pi k / L`. Sampled on any lattice of that period wide
/// enough to hold the band, its lattice spectrum is exactly `c_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    period: f64,
    /// Lowest wavenumber; `coeffs[j]` belongs to `k_min + j`.
    k_min: i64,
    coeffs: Vec<Complex64>,
}

impl TrigPolynomial {
    pub fn new(period: f64, k_min: i64, coeffs: Vec<Complex64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self {
            period,
            k_min,
            coeffs,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        (self.k_min..).zip(self.coeffs.iter().copied())
    }

    fn frequency_step(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let dxi = self.frequency_step();
        let step = Complex64::from_polar(1.0, dxi * x);
        let mut phase = Complex64::from_polar(1.0, self.k_min as f64 * dxi * x);
        let mut sum = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            sum += c * phase;
            phase *= step;
        }
        sum * dxi / (2.0 * PI).sqrt()
    }

    /// Samples `T(x_m)` through the inverse transform.
    pub fn sample(&self, lattice: &Lattice) -> Result<LatticeField> {
        if (lattice.period() - self.period).abs() > 1e-12 * self.period {
            return Err(Error::NonNestedGrids(format!(
                "lattice period {} differs from polynomial period {}",
                lattice.period(),
                self.period
            )));
        }
        let n = lattice.len() as i64;
        let k_max = self.k_min + self.coeffs.len() as i64 - 1;
        if self.k_min < -n / 2 || k_max >= n / 2 {
            return Err(Error::InvalidArgument(format!(
                "band [{}, {k_max}] does not fit a lattice with {n} points",
                self.k_min
            )));
        }
        let mut spectrum = SpectrumField::zeros(*lattice);
        for (k, c) in self.coefficients() {
            spectrum.set_coefficient(k, c);
        }
        Ok(idft(&spectrum))
    }

    /// `||T||_{L^2}` over one period.
    pub fn l2_norm(&self) -> f64 {
        (self.frequency_step() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `||T'||_{L^2}` over one period.
    pub fn derivative_l2_norm(&self) -> f64 {
        let dxi = self.frequency_step();
        let s: f64 = self
            .coefficients()
            .map(|(k, c)| (k as f64 * dxi).powi(2) * c.norm_sqr())
            .sum();
        (dxi * s).sqrt()
    }
}

/// Seeded random fields with `c_k = (1 + |xi_k|)^{-2} (g_1 + i g_2)`, `g`
/// standard normal, for `k` in the band of the `h = 1` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandLimitedEnsemble {
    pub seed: u64,
    pub samples: usize,
    pub period_target: f64,
}

impl BandLimitedEnsemble {
    pub fn new(seed: u64, samples: usize) -> Self {
        Self {
            seed,
            samples,
            period_target: 32.0,
        }
    }

    pub fn members(&self) -> Result<Vec<TrigPolynomial>> {
        let base = make_lattice(1.0, self.period_target)?;
        let n = base.len() as i64;
        let dxi = base.frequency_step();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.samples)
            .map(|_| {
                let coeffs = (-n / 2..n / 2)
                    .map(|k| {
                        let weight = (1.0 + (k as f64 * dxi).abs()).powi(-2);
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im) * weight
                    })
                    .collect();
                TrigPolynomial::new(base.period(), -n / 2, coeffs)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_matches_direct_evaluation() {
        let members = BandLimitedEnsemble::new(7, 3).members().unwrap();
        for h in [1.0, 0.5, 0.125] {
            let lattice = make_lattice(h, 32.0).unwrap();
            for t in &members {
                let f = t.sample(&lattice).unwrap();
                for (x, v) in lattice.points().zip(f.values()) {
                    assert!((t.eval(x) - v).norm() < 1e-12, "h={h} x={x}");
                }
            }
        }
    }

    #[test]
    fn exact_norms_match_fine_lattice() {
        // band-limited, so the rectangle rule and spectral derivative are exact
        let t = &BandLimitedEnsemble::new(3, 1).members().unwrap()[0];
        let lattice = make_lattice(1.0 / 16.0, 32.0).unwrap();
        let f = t.sample(&lattice).unwrap();
        assert!((f.l2_norm() - t.l2_norm()).abs() < 1e-12 * t.l2_norm());
        assert!((f.hs_norm(1.0, true) - t.derivative_l2_norm()).abs() < 1e-11 * t.derivative_l2_norm());
    }

    #[test]
    fn ensemble_is_reproducible() {
        let a = BandLimitedEnsemble::new(42, 5).members().unwrap();
        let b = BandLimitedEnsemble::new(42, 5).members().unwrap();
        let c = BandLimitedEnsemble::new(43, 5).members().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn band_must_fit() {
        let t = &BandLimitedEnsemble::new(1, 1).members().unwrap()[0];
        let wrong_period = make_lattice(1.0, 64.0).unwrap();
        assert!(t.sample(&wrong_period).is_err());
        let narrow = TrigPolynomial::new(32.0, -20, vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!(narrow.sample(&make_lattice(1.0, 32.0).unwrap()).is_err());
    }
}
