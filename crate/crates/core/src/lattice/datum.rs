use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Lattice;
use crate::error::{Error, Result};

/// Relative amplitude a datum may keep at the edges of the periodic box.
pub const DECAY_TOLERANCE: f64 = 1e-10;

/// Shape parameters shared by the analytic pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    /// Carrier wavenumber: the pulse is multiplied by `exp(i velocity x)`.
    pub velocity: f64,
}

/// Piecewise-linear profile read from a field snapshot file; zero outside
/// the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    pub source: PathBuf,
    pub xs: Vec<f64>,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialDatum {
    /// `A exp(-((x - c) / w)^2) exp(i v x)`
    Gaussian(Pulse),
    /// `A sech((x - c) / w) exp(i v x)`
    Sech(Pulse),
    FromFile(SampledProfile),
}

impl Pulse {
    fn validate(&self) -> Result<()> {
        let finite = [self.amplitude, self.width, self.center, self.velocity]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidDatum("pulse parameters must be finite".into()));
        }
        // amplitude 0 is accepted as the degenerate zero datum
        if self.amplitude < 0.0 {
            return Err(Error::InvalidDatum(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if self.width <= 0.0 {
            return Err(Error::InvalidDatum(format!(
                "width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }
}

impl InitialDatum {
    pub fn gaussian(amplitude: f64, width: f64, center: f64, velocity: f64) -> Result<Self> {
        let pulse = Pulse {
            amplitude,
            width,
            center,
            velocity,
        };
        pulse.validate()?;
        Ok(Self::Gaussian(pulse))
    }

    pub fn sech(amplitude: f64, width: f64, center: f64, velocity: f64) -> Result<Self> {
        let pulse = Pulse {
            amplitude,
            width,
            center,
            velocity,
        };
        pulse.validate()?;
        Ok(Self::Sech(pulse))
    }

    /// Loads an `x,re,im` snapshot and treats it as a piecewise-linear profile.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (xs, values) = crate::io::read_samples_csv(path)?;
        Self::from_samples(path.to_path_buf(), xs, values)
    }

    pub fn from_samples(source: PathBuf, xs: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Error::InvalidDatum(
                "a sampled profile needs at least two (x, value) pairs".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDatum("sample positions must increase strictly".into()));
        }
        if values.iter().any(|z| !z.is_finite()) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDatum("samples must be finite".into()));
        }
        let peak = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = values[0].norm().max(values[values.len() - 1].norm());
        if edge > DECAY_TOLERANCE * peak {
            return Err(Error::BoundaryDecay {
                ratio: edge / peak,
            });
        }
        Ok(Self::FromFile(SampledProfile { source, xs, values }))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Self::Gaussian(p) => {
                let y = (x - p.center) / p.width;
                Complex64::from_polar(p.amplitude * (-y * y).exp(), p.velocity * x)
            }
            Self::Sech(p) => {
                let y = (x - p.center) / p.width;
                Complex64::from_polar(p.amplitude / y.cosh(), p.velocity * x)
            }
            Self::FromFile(s) => s.eval(x),
        }
    }

    /// `max |phi|`.
    pub fn peak(&self) -> f64 {
        match self {
            Self::Gaussian(p) | Self::Sech(p) => p.amplitude,
            Self::FromFile(s) => s.values.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    /// `||phi||_{L^2(R)}`, in closed form.
    pub fn l2_norm(&self) -> f64 {
        match self {
            Self::Gaussian(p) => p.amplitude * (p.width * (PI / 2.0).sqrt()).sqrt(),
            Self::Sech(p) => p.amplitude * (2.0 * p.width).sqrt(),
            Self::FromFile(s) => s.l2_norm(),
        }
    }

    /// `||phi'||_{L^2(R)}`, in closed form.
    pub fn derivative_l2_norm(&self) -> f64 {
        match self {
            Self::Gaussian(p) => {
                let w = p.width;
                let v = p.velocity;
                p.amplitude * ((PI / 2.0).sqrt() * (1.0 / w + v * v * w)).sqrt()
            }
            Self::Sech(p) => {
                let w = p.width;
                let v = p.velocity;
                p.amplitude * (2.0 / (3.0 * w) + 2.0 * v * v * w).sqrt()
            }
            Self::FromFile(s) => s.derivative_l2_norm(),
        }
    }

    /// Largest relative amplitude left at `x = +-L/2`.
    pub fn boundary_ratio(&self, lattice: &Lattice) -> f64 {
        let peak = self.peak();
        if peak == 0.0 {
            return 0.0;
        }
        let half = 0.5 * lattice.period();
        self.eval(-half).norm().max(self.eval(half).norm()) / peak
    }

    pub fn check_decay(&self, lattice: &Lattice) -> Result<()> {
        let ratio = self.boundary_ratio(lattice);
        if ratio > DECAY_TOLERANCE {
            Err(Error::BoundaryDecay { ratio })
        } else {
            Ok(())
        }
    }
}

impl SampledProfile {
    fn eval(&self, x: f64) -> Complex64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let j = match self.xs.partition_point(|&xj| xj <= x) {
            0 => 0,
            j if j >= n => n - 2,
            j => j - 1,
        };
        let t = (x - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
        self.values[j] + (self.values[j + 1] - self.values[j]) * t
    }

    fn segments(&self) -> impl Iterator<Item = (f64, Complex64, Complex64)> + '_ {
        self.xs
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (x[1] - x[0], v[0], v[1]))
    }

    fn l2_norm(&self) -> f64 {
        self.segments()
            .map(|(d, a, b)| d * (a.norm_sqr() + (a * b.conj()).re + b.norm_sqr()) / 3.0)
            .sum::<f64>()
            .sqrt()
    }

    fn derivative_l2_norm(&self) -> f64 {
        self.segments()
            .map(|(d, a, b)| (b - a).norm_sqr() / d)
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let dx = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|j| f(a + j as f64 * dx)).sum();
        dx * (inner + 0.5 * (f(a) + f(b)))
    }

    #[test]
    fn closed_form_norms_match_quadrature() {
        let data = [
            InitialDatum::gaussian(1.3, 0.8, 0.4, 1.5).unwrap(),
            InitialDatum::sech(0.7, 1.2, -0.3, -0.6).unwrap(),
        ];
        for d in &data {
            let l2 = trapezoid(|x| d.eval(x).norm_sqr(), -40.0, 40.0, 400_000).sqrt();
            assert!((l2 - d.l2_norm()).abs() < 1e-9, "{d:?}");
            let dx = 1e-5;
            let deriv = trapezoid(
                |x| ((d.eval(x + dx) - d.eval(x - dx)) / (2.0 * dx)).norm_sqr(),
                -40.0,
                40.0,
                400_000,
            )
            .sqrt();
            assert!((deriv - d.derivative_l2_norm()).abs() < 1e-6, "{d:?}");
        }
    }

    #[test]
    fn rejects_nonpositive_shape() {
        assert!(InitialDatum::gaussian(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(InitialDatum::gaussian(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(InitialDatum::sech(1.0, -2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn decay_check() {
        let l = crate::lattice::make_lattice(0.5, 32.0).unwrap();
        assert!(InitialDatum::gaussian(1.0, 1.0, 0.0, 0.0).unwrap().check_decay(&l).is_ok());
        // sech(16) ~ 2e-7
        let s = InitialDatum::sech(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(s.check_decay(&l), Err(Error::BoundaryDecay { .. })));
        let wide = crate::lattice::make_lattice(0.5, 64.0).unwrap();
        assert!(s.check_decay(&wide).is_ok());
    }

    #[test]
    fn sampled_profile_norms_are_exact_for_a_hat() {
        let d = InitialDatum::from_samples(
            PathBuf::from("hat"),
            vec![-1.0, 0.0, 1.0],
            vec![0.0.into(), 1.0.into(), 0.0.into()],
        )
        .unwrap();
        assert!((d.l2_norm() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((d.derivative_l2_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.eval(0.5), Complex64::new(0.5, 0.0));
        assert_eq!(d.eval(3.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn sampled_profile_must_vanish_at_its_ends() {
        let r = InitialDatum::from_samples(
            PathBuf::from("step"),
            vec![0.0, 1.0],
            vec![1.0.into(), 1.0.into()],
        );
        assert!(matches!(r, Err(Error::BoundaryDecay { .. })));
    }
}
