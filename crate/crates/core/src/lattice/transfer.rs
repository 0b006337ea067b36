use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ContinuumField, InitialDatum, Lattice, LatticeField};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

const CELL_NODES: usize = 8;

/// Cell averages `f_h(x) = (1/h) int_x^{x+h} phi` of an initial datum.
///
/// Gaussians without a carrier use the error function; every other datum
/// goes through 8-point Gauss-Legendre on each cell.
pub fn discretize(datum: &InitialDatum, lattice: &Lattice) -> Result<LatticeField> {
    datum.check_decay(lattice)?;
    match datum {
        InitialDatum::Gaussian(p) if p.velocity == 0.0 => {
            let h = lattice.spacing();
            let scale = p.amplitude * p.width * PI.sqrt() / (2.0 * h);
            Ok(LatticeField::from_fn(*lattice, |x| {
                let a = (x - p.center) / p.width;
                let b = (x + h - p.center) / p.width;
                Complex64::new(scale * erf_diff(a, b), 0.0)
            }))
        }
        _ => Ok(discretize_with(lattice, |x| datum.eval(x))),
    }
}

/// Cell averages of an arbitrary function by per-cell Gauss-Legendre.
pub fn discretize_with(lattice: &Lattice, f: impl Fn(f64) -> Complex64) -> LatticeField {
    let rule = QuadratureRule::gauss_legendre(CELL_NODES).expect("fixed node count");
    let h = lattice.spacing();
    LatticeField::from_fn(*lattice, |x| {
        rule.iter()
            .map(|(r, w)| f(x + r * h) * w)
            .sum::<Complex64>()
    })
}

/// `erf(b) - erf(a)` for `a <= b`, using `erfc` in the tails.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        libm::erfc(a) - libm::erfc(b)
    } else if b <= 0.0 {
        libm::erfc(-b) - libm::erfc(-a)
    } else {
        libm::erf(b) - libm::erf(a)
    }
}

/// Refinement ratio `h / h_target`; errors unless the grids share the
/// period and the ratio is a power of two.
pub(crate) fn nesting_ratio(coarse: &Lattice, fine: &Lattice) -> Result<usize> {
    let (l, lf) = (coarse.period(), fine.period());
    if (l - lf).abs() > 1e-12 * l {
        return Err(Error::NonNestedGrids(format!("periods differ: {l} vs {lf}")));
    }
    let ratio = coarse.spacing() / fine.spacing();
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio || !(rounded as usize).is_power_of_two()
    {
        return Err(Error::NonNestedGrids(format!(
            "spacing ratio {ratio} is not a power of two"
        )));
    }
    Ok(rounded as usize)
}

/// Piecewise-linear interpolant `p_h f` sampled on a nested finer grid.
pub fn interpolate(f: &LatticeField, target: &Lattice) -> Result<ContinuumField> {
    let ratio = nesting_ratio(f.lattice(), target)?;
    let n = f.lattice().len();
    let v = f.values();
    let values = (0..target.len())
        .map(|j| {
            let m = j / ratio;
            let s = (j % ratio) as f64 / ratio as f64;
            v[m] + (v[(m + 1) % n] - v[m]) * s
        })
        .collect();
    Ok(ContinuumField::from_samples(LatticeField::from_parts(*target, values)))
}

/// `||p_h f - g||_{L^2}` over one period, integrating each cell with
/// Gauss-Legendre.
pub fn continuum_l2_distance(f: &LatticeField, g: impl Fn(f64) -> Complex64) -> f64 {
    let rule = QuadratureRule::gauss_legendre(CELL_NODES).expect("fixed node count");
    let lattice = f.lattice();
    let h = lattice.spacing();
    let n = lattice.len();
    let v = f.values();
    let sum: f64 = (0..n)
        .map(|m| {
            let x = lattice.point(m);
            let slope = v[(m + 1) % n] - v[m];
            rule.iter()
                .map(|(r, w)| w * (v[m] + slope * r - g(x + r * h)).norm_sqr())
                .sum::<f64>()
        })
        .sum();
    (h * sum).sqrt()
}
