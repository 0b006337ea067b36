//! Gauss-Legendre rules on `[0, 1]` for the averaging integral in `r`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Hard ceiling for node escalation.
pub const MAX_NODES: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `m`-point Gauss-Legendre rule mapped to `[0, 1]`, weights summing to one.
    pub fn gauss_legendre(m: usize) -> Result<Self> {
        if m == 0 || m > 4096 {
            return Err(Error::InvalidQuadrature(format!(
                "node count must be in 1..=4096, got {m}"
            )));
        }
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            // Tricomi initial guess for the i-th largest root on [-1, 1]
            let theta = PI * (i as f64 + 0.75) / (mf + 0.5);
            let mut x = (1.0 - (mf - 1.0) / (8.0 * mf * mf * mf)) * theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[m - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[m - 1 - i] = 0.5 * w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidQuadrature("nodes and weights must pair up".into()));
        }
        if nodes.iter().any(|r| !(0.0..=1.0).contains(r)) || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidQuadrature(
                "nodes must lie in [0, 1] with positive weights".into(),
            ));
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(r, w)| w * f(r)).sum()
    }
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
