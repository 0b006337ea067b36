//! Direct-summation and dense-matrix oracles for small lattices. Nothing
//! here touches the FFT, the symbol tables or the library quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

use dmnls_core::lattice::{Lattice, LatticeField};
use num_complex::Complex64;

pub type Matrix = Vec<Vec<Complex64>>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn wavenumbers(n: usize) -> impl Iterator<Item = i64> {
    let n = n as i64;
    -n / 2..n / 2
}

/// `f^(xi_k) = h / sqrt(2 pi) sum_m f(x_m) e^{-i xi_k x_m}`, increasing `k`.
pub fn dft(f: &LatticeField) -> Vec<Complex64> {
    let l = f.lattice();
    let dxi = 2.0 * PI / l.period();
    wavenumbers(l.len())
        .map(|k| {
            let xi = k as f64 * dxi;
            let s: Complex64 = l
                .points()
                .zip(f.values())
                .map(|(x, &v)| v * Complex64::from_polar(1.0, -xi * x))
                .sum();
            s * l.spacing() / (2.0 * PI).sqrt()
        })
        .collect()
}

/// `f(x_m) = d xi / sqrt(2 pi) sum_k f^_k e^{i xi_k x_m}`.
pub fn idft(lattice: &Lattice, coeffs: &[Complex64]) -> Vec<Complex64> {
    let dxi = 2.0 * PI / lattice.period();
    lattice
        .points()
        .map(|x| {
            let s: Complex64 = wavenumbers(lattice.len())
                .zip(coeffs)
                .map(|(k, &c)| c * Complex64::from_polar(1.0, k as f64 * dxi * x))
                .sum();
            s * dxi / (2.0 * PI).sqrt()
        })
        .collect()
}

/// Dense periodic second-difference matrix with divisor `h^2`.
pub fn laplacian_matrix(lattice: &Lattice) -> Matrix {
    let n = lattice.len();
    let c = 1.0 / lattice.spacing().powi(2);
    let mut a = vec![vec![ZERO; n]; n];
    for m in 0..n {
        a[m][m] = Complex64::new(-2.0 * c, 0.0);
        a[m][(m + 1) % n] += c;
        a[m][(m + n - 1) % n] += c;
    }
    a
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// `exp(i r A)` by scaling and squaring a 30-term Taylor series.
pub fn expm_i(a: &Matrix, r: f64) -> Matrix {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * r.abs();
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 2;
    let scale = Complex64::new(0.0, r / f64::from(2u32.pow(squarings)));
    let x: Matrix = a
        .iter()
        .map(|row| row.iter().map(|z| z * scale).collect())
        .collect();
    let mut result: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..=30 {
        term = matmul(&term, &x);
        for row in term.iter_mut() {
            row.iter_mut().for_each(|z| *z /= k as f64);
        }
        for (ri, ti) in result.iter_mut().zip(&term) {
            ri.iter_mut().zip(ti).for_each(|(a, b)| *a += b);
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// `e^{i r Delta_h} f` from the dense stencil.
pub fn propagate(f: &LatticeField, r: f64) -> Vec<Complex64> {
    matvec(&expm_i(&laplacian_matrix(f.lattice()), r), f.values())
}

/// Closed-form 5-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_5() -> Vec<(f64, f64)> {
    let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
    [(-b, wb), (-a, wa), (0.0, 128.0 / 225.0), (a, wa), (b, wb)]
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// `sum_j w_j T_{r_j}^{-1}(|T_{r_j} f|^{p-1} T_{r_j} f)` with dense propagators.
pub fn averaged_nonlinearity(f: &LatticeField, p: f64, rule: &[(f64, f64)]) -> Vec<Complex64> {
    let lap = laplacian_matrix(f.lattice());
    let mut acc = vec![ZERO; f.values().len()];
    for &(r, w) in rule {
        let forward = expm_i(&lap, r);
        let back = expm_i(&lap, -r);
        let u: Vec<Complex64> = matvec(&forward, f.values())
            .into_iter()
            .map(|z| z * z.norm().powf(p - 1.0))
            .collect();
        for (a, b) in acc.iter_mut().zip(matvec(&back, &u)) {
            *a += w * b;
        }
    }
    acc
}

pub fn max_relative_error(got: &[Complex64], want: &[Complex64]) -> f64 {
    let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

/// A fixed, fully populated complex field on `lattice`.
pub fn probe_field(lattice: &Lattice) -> LatticeField {
    LatticeField::from_fn(*lattice, |x| {
        Complex64::new((0.7 * x).cos() + 0.3 * x, 0.5 * (1.3 * x).sin() - 0.2)
            * (-(x * x) / 6.0).exp()
    })
}
