//! The averaged nonlocal nonlinearity `<Q>(f) = int_0^1 T_r^{-1}(|T_r f|^{p-1} T_r f) dr`,
//! the conserved mass and energy, and interaction-picture RK4 integration of
//! `i u_t + d_av Delta u + <Q>(u) = 0`.
//!
//! With `u = e^{i d_av t Delta} v` the linear flow is exact and
//! `v_t = i e^{-i d_av t Delta} <Q>(e^{i d_av t Delta} v)`, which is
//! non-stiff because `<Q>` is bounded on `H^1` balls.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{barrier_dav0, blowup_horizon};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeField};
use crate::quadrature::{QuadratureRule, MAX_NODES};
use crate::spectral::{multiplier_table, FftPair, Symbol};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default starting node count for the `r`-quadrature.
pub const DEFAULT_NODES: usize = 32;
/// Spectral tail threshold used by node escalation.
pub const BANDWIDTH_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Nonlinearity exponent, `p > 1`.
    pub p: f64,
    /// Average dispersion.
    pub d_av: f64,
    pub symbol: Symbol,
    /// Test hook: `false` drops the nonlinear term entirely.
    pub nonlinear: bool,
}

impl ProblemSpec {
    pub fn new(p: f64, d_av: f64, symbol: Symbol) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(format!("p > 1 required, got {p}")));
        }
        if !d_av.is_finite() {
            return Err(Error::InvalidArgument(format!("d_av must be finite, got {d_av}")));
        }
        Ok(Self {
            p,
            d_av,
            symbol,
            nonlinear: true,
        })
    }

    pub fn linear(d_av: f64, symbol: Symbol) -> Self {
        Self {
            p: 3.0,
            d_av,
            symbol,
            nonlinear: false,
        }
    }

    pub fn with_symbol(mut self, symbol: Symbol) -> Self {
        self.symbol = symbol;
        self
    }

    /// Whether `p` lies in the range where the continuum limit is known to hold.
    pub fn is_admissible(&self) -> bool {
        if self.d_av > 0.0 {
            self.p < 9.0
        } else if self.d_av < 0.0 {
            true
        } else {
            self.p < 5.0
        }
    }

    pub fn admissibility_warning(&self) -> Option<String> {
        if self.is_admissible() {
            return None;
        }
        let range = if self.d_av > 0.0 { "1 < p < 9" } else { "1 < p < 5" };
        Some(format!(
            "p = {} is outside the admissible range {range} for d_av = {}",
            self.p, self.d_av
        ))
    }
}

/// `|z|^{p-1} z`, zero at the origin.
#[inline]
pub fn nonlinearity_pointwise(z: Complex64, p: f64) -> Complex64 {
    let m = z.norm_sqr();
    if m == 0.0 {
        ZERO
    } else if p == 3.0 {
        z * m
    } else {
        z * m.powf(0.5 * (p - 1.0))
    }
}

/// How many `r`-nodes to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureSetting {
    Fixed(usize),
    /// Start at `base` nodes and double until the bandwidth test passes.
    Auto { base: usize },
}

impl Default for QuadratureSetting {
    fn default() -> Self {
        QuadratureSetting::Auto {
            base: DEFAULT_NODES,
        }
    }
}

/// Resolves a node count for `field`.
///
/// Auto mode doubles until the symbol at the field's bandwidth (the largest
/// frequency with `|f^| >= 1e-8 max|f^|`) advances the phase by less than
/// `pi/2` per node panel, capped at [`MAX_NODES`].
pub fn select_nodes(field: &LatticeField, symbol: Symbol, setting: QuadratureSetting) -> usize {
    match setting {
        QuadratureSetting::Fixed(m) => m,
        QuadratureSetting::Auto { base } => {
            let spectrum = crate::spectral::dft(field);
            let xi = spectrum.bandwidth(BANDWIDTH_THRESHOLD);
            let rate = symbol.eval(xi, field.lattice().spacing()).abs();
            let mut m = base.max(1);
            while rate / m as f64 >= 0.5 * PI {
                if m >= MAX_NODES {
                    warn!(
                        "r-quadrature capped at {MAX_NODES} nodes; phase rate {rate:.3e} is under-resolved"
                    );
                    return MAX_NODES;
                }
                m = (m * 2).min(MAX_NODES);
            }
            m
        }
    }
}

/// Precomputed transforms and multiplier tables for one
/// (grid, problem, quadrature) triple. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct Dynamics {
    lattice: Lattice,
    spec: ProblemSpec,
    quad: QuadratureRule,
    fft: FftPair,
    symbol: Vec<f64>,
    node_tables: Vec<Vec<Complex64>>,
}

impl Dynamics {
    pub fn new(lattice: Lattice, spec: ProblemSpec, quad: QuadratureRule) -> Self {
        let symbol = spec.symbol.table(&lattice);
        let node_tables = quad
            .nodes()
            .iter()
            .map(|&r| multiplier_table(&symbol, r))
            .collect();
        Self {
            lattice,
            spec,
            quad,
            fft: FftPair::new(lattice.len()),
            symbol,
            node_tables,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    fn check_lattice(&self, f: &LatticeField) -> Result<()> {
        if f.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch {
                left: f.lattice().spacing(),
                left_n: f.lattice().len(),
                right: self.lattice.spacing(),
                right_n: self.lattice.len(),
            });
        }
        Ok(())
    }

    fn scratch(&self) -> Vec<Complex64> {
        vec![ZERO; self.fft.scratch_len()]
    }

    fn spectrum_raw(&self, values: &[Complex64], scratch: &mut [Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.fft.forward(&mut buf, scratch);
        buf
    }

    /// Raw FFT of `<Q>(u)` given the raw FFT of `u`.
    fn nonlinear_raw(&self, u_hat: &[Complex64], scratch: &mut [Complex64]) -> Vec<Complex64> {
        let p = self.spec.p;
        let mut acc = vec![ZERO; u_hat.len()];
        let mut buf = vec![ZERO; u_hat.len()];
        for (table, &w) in self.node_tables.iter().zip(self.quad.weights()) {
            for ((b, &c), &m) in buf.iter_mut().zip(u_hat).zip(table) {
                *b = c * m;
            }
            self.fft.inverse(&mut buf, scratch);
            buf.iter_mut().for_each(|z| *z = nonlinearity_pointwise(*z, p));
            self.fft.forward(&mut buf, scratch);
            for ((a, &b), &m) in acc.iter_mut().zip(buf.iter()).zip(table) {
                *a += w * b * m.conj();
            }
        }
        acc
    }

    pub fn averaged_nonlinearity(&self, f: &LatticeField) -> Result<LatticeField> {
        self.check_lattice(f)?;
        if !self.spec.nonlinear {
            return Ok(LatticeField::zeros(self.lattice));
        }
        let mut scratch = self.scratch();
        let f_hat = self.spectrum_raw(f.values(), &mut scratch);
        let mut q = self.nonlinear_raw(&f_hat, &mut scratch);
        self.fft.inverse(&mut q, &mut scratch);
        let out = LatticeField::from_parts(self.lattice, q);
        if !out.is_finite() {
            return Err(Error::NonFinite { t: f64::NAN });
        }
        Ok(out)
    }

    /// Interaction-picture vector field at time `t`.
    pub fn rhs(&self, v: &LatticeField, t: f64) -> Result<LatticeField> {
        self.check_lattice(v)?;
        Ok(LatticeField::from_parts(self.lattice, self.rhs_values(v.values(), t)?))
    }

    fn rhs_values(&self, v: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        if !self.spec.nonlinear {
            return Ok(vec![ZERO; v.len()]);
        }
        let mut scratch = self.scratch();
        let mut u_hat = self.spectrum_raw(v, &mut scratch);
        let phase = self.spec.d_av * t;
        let time_table = if phase != 0.0 {
            let table = multiplier_table(&self.symbol, phase);
            for (c, m) in u_hat.iter_mut().zip(&table) {
                *c *= m;
            }
            Some(table)
        } else {
            None
        };
        let mut q = self.nonlinear_raw(&u_hat, &mut scratch);
        match &time_table {
            Some(table) => {
                for (c, m) in q.iter_mut().zip(table) {
                    *c *= Complex64::i() * m.conj();
                }
            }
            None => q.iter_mut().for_each(|c| *c *= Complex64::i()),
        }
        self.fft.inverse(&mut q, &mut scratch);
        if q.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        Ok(q)
    }

    /// One classical RK4 step of the interaction-picture flow. `dt` may be
    /// negative to integrate backwards.
    pub fn step(&self, v: &LatticeField, t: f64, dt: f64) -> Result<LatticeField> {
        self.check_lattice(v)?;
        Ok(LatticeField::from_parts(
            self.lattice,
            self.step_values(v.values(), t, dt)?,
        ))
    }

    fn step_values(&self, v: &[Complex64], t: f64, dt: f64) -> Result<Vec<Complex64>> {
        let half = 0.5 * dt;
        let axpy = |a: &[Complex64], s: f64, k: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(k).map(|(&x, &y)| x + s * y).collect()
        };
        let k1 = self.rhs_values(v, t)?;
        let k2 = self.rhs_values(&axpy(v, half, &k1), t + half)?;
        let k3 = self.rhs_values(&axpy(v, half, &k2), t + half)?;
        let k4 = self.rhs_values(&axpy(v, dt, &k3), t + dt)?;
        let sixth = dt / 6.0;
        let out: Vec<Complex64> = (0..v.len())
            .map(|j| v[j] + sixth * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]))
            .collect();
        if out.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { t: t + dt });
        }
        Ok(out)
    }

    /// `e^{i d_av t Delta} v`.
    pub fn free_flow(&self, v: &LatticeField, t: f64) -> LatticeField {
        let mut scratch = self.scratch();
        let mut buf = self.spectrum_raw(v.values(), &mut scratch);
        let phase = self.spec.d_av * t;
        if phase != 0.0 {
            for (c, m) in buf.iter_mut().zip(multiplier_table(&self.symbol, phase)) {
                *c *= m;
            }
        }
        self.fft.inverse(&mut buf, &mut scratch);
        LatticeField::from_parts(self.lattice, buf)
    }

    /// `sum_j w_j ||T_{r_j} f||^q_{L^q_h}`.
    pub fn averaged_lq(&self, f: &LatticeField, q: f64) -> Result<f64> {
        self.check_lattice(f)?;
        let mut scratch = self.scratch();
        let f_hat = self.spectrum_raw(f.values(), &mut scratch);
        let h = self.lattice.spacing();
        let mut buf = vec![ZERO; f_hat.len()];
        let mut total = 0.0;
        for (table, &w) in self.node_tables.iter().zip(self.quad.weights()) {
            for ((b, &c), &m) in buf.iter_mut().zip(&f_hat).zip(table) {
                *b = c * m;
            }
            self.fft.inverse(&mut buf, &mut scratch);
            let s: f64 = buf.iter().map(|z| z.norm_sqr().powf(0.5 * q)).sum();
            total += w * h * s;
        }
        Ok(total)
    }

    /// Energy consistent with the flow: the kinetic term uses the same symbol
    /// (`||D+ f||^2` for the lattice) and the potential uses the same nodes.
    pub fn energy(&self, f: &LatticeField) -> Result<f64> {
        self.check_lattice(f)?;
        let mut scratch = self.scratch();
        let f_hat = self.spectrum_raw(f.values(), &mut scratch);
        let n = self.lattice.len() as f64;
        let h = self.lattice.spacing();
        let kinetic: f64 = f_hat
            .iter()
            .zip(&self.symbol)
            .map(|(c, &s)| -s * c.norm_sqr())
            .sum::<f64>()
            * h
            / n;
        let mut e = 0.5 * self.spec.d_av * kinetic;
        if self.spec.nonlinear {
            let p = self.spec.p;
            e -= self.averaged_lq(f, p + 1.0)? / (p + 1.0);
        }
        Ok(e)
    }

    /// Spectral `||v||_{H^1}` straight from the raw transform.
    fn h1_norm_values(&self, v: &[Complex64], scratch: &mut [Complex64]) -> f64 {
        let v_hat = self.spectrum_raw(v, scratch);
        let n = self.lattice.len() as f64;
        let h = self.lattice.spacing();
        let s: f64 = v_hat
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let xi = self.lattice.frequency(k);
                (1.0 + xi * xi) * c.norm_sqr()
            })
            .sum();
        (s * h / n).sqrt()
    }
}

/// `||f||^2_{L^2_h}`.
pub fn mass(f: &LatticeField) -> f64 {
    f.l2_norm().powi(2)
}

pub fn averaged_nonlinearity(
    f: &LatticeField,
    spec: &ProblemSpec,
    quad: &QuadratureRule,
) -> Result<LatticeField> {
    Dynamics::new(*f.lattice(), *spec, quad.clone()).averaged_nonlinearity(f)
}

pub fn energy(f: &LatticeField, spec: &ProblemSpec, quad: &QuadratureRule) -> Result<f64> {
    Dynamics::new(*f.lattice(), *spec, quad.clone()).energy(f)
}

pub fn rhs_interaction(
    v: &LatticeField,
    t: f64,
    spec: &ProblemSpec,
    quad: &QuadratureRule,
) -> Result<LatticeField> {
    Dynamics::new(*v.lattice(), *spec, quad.clone()).rhs(v, t)
}

pub fn step_rk4(
    v: &LatticeField,
    t: f64,
    dt: f64,
    spec: &ProblemSpec,
    quad: &QuadratureRule,
) -> Result<LatticeField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Dynamics::new(*v.lattice(), *spec, quad.clone()).step(v, t, dt)
}

/// Per-snapshot conserved quantities and norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1: f64,
    pub dplus: f64,
    /// `d_av = 0` barrier; `None` otherwise. Infinite past the threshold horizon.
    pub barrier: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [self.t, self.mass, self.energy, self.h1, self.dplus]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub horizon: f64,
    pub dt: f64,
    pub snapshot_every: usize,
    pub quadrature: QuadratureSetting,
    /// Abort once `||u||_{H^1}` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// `(||phi||, ||phi'||)` for the `d_av = 0` barrier; defaults to the
    /// lattice norms of the initial field.
    pub barrier_norms: Option<(f64, f64)>,
    pub keep_snapshots: bool,
}

impl EvolveOptions {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self {
            horizon,
            dt,
            snapshot_every: 20,
            quadrature: QuadratureSetting::default(),
            blowup_factor: 1e3,
            barrier_norms: None,
            keep_snapshots: true,
        }
    }

    pub fn snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn quadrature(mut self, q: QuadratureSetting) -> Self {
        self.quadrature = q;
        self
    }

    pub fn barrier_norms(mut self, l2: f64, dl2: f64) -> Self {
        self.barrier_norms = Some((l2, dl2));
        self
    }

    pub fn keep_snapshots(mut self, keep: bool) -> Self {
        self.keep_snapshots = keep;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidArgument("snapshot_every must be at least 1".into()));
        }
        if let QuadratureSetting::Fixed(0) | QuadratureSetting::Auto { base: 0 } = self.quadrature {
            return Err(Error::InvalidQuadrature("node count must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps and the step actually taken (`horizon / steps`).
    pub fn resolved_steps(&self) -> (usize, f64) {
        let steps = ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.horizon / steps as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: LatticeField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub quadrature_nodes: usize,
    pub steps: usize,
    pub dt: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&LatticeField> {
        self.snapshots.last().map(|s| &s.field)
    }

    /// `max_t |m(t) - m(0)| / m(0)`; zero for the zero trajectory.
    pub fn relative_mass_drift(&self) -> f64 {
        relative_drift(self.diagnostics.iter().map(|d| d.mass))
    }

    pub fn relative_energy_drift(&self) -> f64 {
        relative_drift(self.diagnostics.iter().map(|d| d.energy))
    }

    pub fn sup_h1(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.h1).fold(0.0, f64::max)
    }
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let Some(&first) = values.first() else {
        return 0.0;
    };
    let worst = values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
    if first == 0.0 {
        worst
    } else {
        worst / first.abs()
    }
}

/// Integrates from `phi` to `opts.horizon`, recording diagnostics (and,
/// optionally, fields) every `snapshot_every` steps and at the horizon.
pub fn evolve(phi: &LatticeField, spec: &ProblemSpec, opts: &EvolveOptions) -> Result<Trajectory> {
    opts.validate()?;
    if !phi.is_finite() {
        return Err(Error::NonFinite { t: 0.0 });
    }
    if let Some(msg) = spec.admissibility_warning() {
        warn!("{msg}");
    }
    let nodes = select_nodes(phi, spec.symbol, opts.quadrature);
    let dynamics = Dynamics::new(*phi.lattice(), *spec, QuadratureRule::gauss_legendre(nodes)?);

    let barrier_norms = (spec.d_av == 0.0).then(|| {
        opts.barrier_norms
            .unwrap_or_else(|| (phi.l2_norm(), phi.forward_diff().l2_norm()))
    });
    if let Some((l2, dl2)) = barrier_norms {
        let t_star = blowup_horizon(l2, dl2, spec.p);
        if opts.horizon >= t_star {
            warn!("horizon T = {} reaches the d_av = 0 threshold T* = {t_star:.6}", opts.horizon);
        }
    }

    let (steps, dt) = opts.resolved_steps();
    let mut scratch = dynamics.scratch();
    let h1_start = dynamics.h1_norm_values(phi.values(), &mut scratch);
    let ceiling = opts.blowup_factor * h1_start;

    let mut traj = Trajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        quadrature_nodes: nodes,
        steps,
        dt,
    };
    let record = |traj: &mut Trajectory, v: &[Complex64], t: f64| -> Result<()> {
        let u = dynamics.free_flow(&LatticeField::from_parts(*phi.lattice(), v.to_vec()), t);
        let diag = DiagnosticsRecord {
            t,
            mass: mass(&u),
            energy: dynamics.energy(&u)?,
            h1: u.h1_norm(),
            dplus: u.forward_diff().l2_norm(),
            barrier: barrier_norms.map(|(l2, dl2)| barrier_dav0(t, l2, dl2, spec.p).value),
        };
        traj.diagnostics.push(diag);
        if opts.keep_snapshots {
            traj.snapshots.push(Snapshot { t, field: u });
        }
        Ok(())
    };

    let mut v = phi.values().to_vec();
    record(&mut traj, &v, 0.0)?;
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let t = step as f64 * dt;
        v = dynamics.step_values(&v, t0, dt)?;
        if h1_start > 0.0 {
            let h1 = dynamics.h1_norm_values(&v, &mut scratch);
            if !(h1 <= ceiling) {
                return Err(Error::BlowUp { t, h1, ceiling });
            }
        }
        if step % opts.snapshot_every == 0 || step == steps {
            record(&mut traj, &v, t)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{discretize, make_lattice, InitialDatum};

    fn gaussian_field(h: f64) -> LatticeField {
        let l = make_lattice(h, 32.0).unwrap();
        discretize(&InitialDatum::gaussian(1.0, 1.0, 0.0, 0.0).unwrap(), &l).unwrap()
    }

    fn cubic(d_av: f64) -> ProblemSpec {
        ProblemSpec::new(3.0, d_av, Symbol::Lattice).unwrap()
    }

    #[test]
    fn pointwise_examples() {
        assert_eq!(nonlinearity_pointwise(ZERO, 3.0), ZERO);
        assert_eq!(nonlinearity_pointwise(ZERO, 1.5), ZERO);
        assert_eq!(nonlinearity_pointwise(Complex64::new(2.0, 0.0), 3.0), Complex64::new(8.0, 0.0));
        let z = nonlinearity_pointwise(Complex64::i(), 2.0);
        assert!((z - Complex64::i()).norm() < 1e-15);
        let w = Complex64::new(0.3, -1.7);
        let g = Complex64::from_polar(1.0, 0.9);
        assert!((nonlinearity_pointwise(g * w, 2.5) - g * nonlinearity_pointwise(w, 2.5)).norm() < 1e-14);
    }

    #[test]
    fn spec_rejects_small_p() {
        assert!(matches!(ProblemSpec::new(0.5, 1.0, Symbol::Lattice), Err(Error::InvalidExponent(_))));
        assert!(ProblemSpec::new(1.0, 1.0, Symbol::Lattice).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(cubic(1.0).is_admissible());
        assert!(!ProblemSpec::new(9.5, 1.0, Symbol::Lattice).unwrap().is_admissible());
        assert!(ProblemSpec::new(20.0, -1.0, Symbol::Lattice).unwrap().is_admissible());
        assert!(!ProblemSpec::new(5.0, 0.0, Symbol::Lattice).unwrap().is_admissible());
        assert!(ProblemSpec::new(4.9, 0.0, Symbol::Lattice).unwrap().admissibility_warning().is_none());
    }

    #[test]
    fn averaged_nonlinearity_zero_and_constant() {
        let l = make_lattice(0.5, 8.0).unwrap();
        let q = QuadratureRule::gauss_legendre(8).unwrap();
        let spec = cubic(1.0);
        let z = averaged_nonlinearity(&LatticeField::zeros(l), &spec, &q).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let c = Complex64::new(0.6, 0.8);
        let out = averaged_nonlinearity(&LatticeField::constant(l, c), &spec, &q).unwrap();
        let want = c * c.norm().powi(2);
        assert!(out.values().iter().all(|z| (z - want).norm() < 1e-14));
    }

    #[test]
    fn averaged_nonlinearity_is_equivariant() {
        let f = gaussian_field(0.5).map(|z| z * Complex64::new(1.0, 0.4));
        let dyn_ = Dynamics::new(*f.lattice(), cubic(1.0), QuadratureRule::gauss_legendre(32).unwrap());
        let q = dyn_.averaged_nonlinearity(&f).unwrap();
        let g = Complex64::from_polar(1.0, 1.1);
        let qg = dyn_.averaged_nonlinearity(&f.scale(g)).unwrap();
        assert!(qg.sub(&q.scale(g)).unwrap().sup_norm() < 1e-13);
        let qs = dyn_.averaged_nonlinearity(&f.shifted(5)).unwrap();
        assert!(qs.sub(&q.shifted(5)).unwrap().sup_norm() < 1e-13);
    }

    /// Node-doubling self-consistency: the gap between M and 2M nodes
    /// shrinks as M doubles.
    #[test]
    fn averaged_nonlinearity_converges_in_nodes() {
        let f = gaussian_field(0.5);
        let spec = cubic(1.0);
        let eval = |m| averaged_nonlinearity(&f, &spec, &QuadratureRule::gauss_legendre(m).unwrap()).unwrap();
        let gaps: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&m| eval(m).sub(&eval(2 * m)).unwrap().l2_norm())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < 0.5 * w[0]), "{gaps:?}");
        assert!(eval(32).sub(&eval(64)).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn mass_examples() {
        let l = make_lattice(0.5, 8.0).unwrap();
        assert_eq!(mass(&LatticeField::zeros(l)), 0.0);
        let mut v = vec![ZERO; 16];
        v[0] = 1.0.into();
        v[9] = 1.0.into();
        assert!((mass(&LatticeField::new(l, v).unwrap()) - 1.0).abs() < 1e-15);
        let f = gaussian_field(0.5);
        let tf = crate::spectral::propagate(&f, 0.7, Symbol::Lattice);
        assert!((mass(&tf) - mass(&f)).abs() < 1e-12 * mass(&f));
    }

    #[test]
    fn energy_examples() {
        let l = Lattice::new(1.0, 4).unwrap();
        let q = QuadratureRule::gauss_legendre(4).unwrap();
        assert_eq!(energy(&LatticeField::zeros(l), &cubic(1.0), &q).unwrap(), 0.0);
        for d_av in [-1.0, 0.0, 2.5] {
            let e = energy(&LatticeField::constant(l, 1.0.into()), &cubic(d_av), &q).unwrap();
            assert!((e + 1.0).abs() < 1e-14, "d_av={d_av}: {e}");
        }
    }

    #[test]
    fn kinetic_term_is_forward_difference_norm() {
        let f = gaussian_field(0.25).map(|z| z * Complex64::new(0.5, 1.0));
        let spec = ProblemSpec::linear(2.0, Symbol::Lattice);
        let e = energy(&f, &spec, &QuadratureRule::gauss_legendre(4).unwrap()).unwrap();
        let want = f.forward_diff().l2_norm().powi(2);
        assert!((e - want).abs() < 1e-12 * want);
    }

    #[test]
    fn energy_converges_in_nodes() {
        let f = gaussian_field(0.5);
        let spec = cubic(1.0);
        let eval = |m| energy(&f, &spec, &QuadratureRule::gauss_legendre(m).unwrap()).unwrap();
        assert!((eval(4) - eval(8)).abs() > (eval(8) - eval(16)).abs());
        assert!((eval(32) - eval(64)).abs() < 1e-13);
    }

    #[test]
    fn rhs_examples() {
        let l = make_lattice(0.5, 8.0).unwrap();
        let q = QuadratureRule::gauss_legendre(8).unwrap();
        let z = rhs_interaction(&LatticeField::zeros(l), 0.3, &cubic(1.0), &q).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let c = Complex64::new(0.5, -0.5);
        let out = rhs_interaction(&LatticeField::constant(l, c), 1.7, &cubic(-2.0), &q).unwrap();
        let want = Complex64::i() * c * c.norm_sqr();
        assert!(out.values().iter().all(|z| (z - want).norm() < 1e-14));

        let f = gaussian_field(0.5);
        let r = rhs_interaction(&f, 0.9, &cubic(0.0), &q).unwrap();
        let expect = averaged_nonlinearity(&f, &cubic(0.0), &q).unwrap().scale(Complex64::i());
        assert!(r.sub(&expect).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn step_rejects_bad_dt_and_fixes_zero() {
        let l = make_lattice(0.5, 8.0).unwrap();
        let q = QuadratureRule::gauss_legendre(8).unwrap();
        let z = LatticeField::zeros(l);
        assert!(step_rk4(&z, 0.0, 0.0, &cubic(1.0), &q).is_err());
        assert!(step_rk4(&z, 0.0, -0.1, &cubic(1.0), &q).is_err());
        assert_eq!(step_rk4(&z, 0.0, 0.1, &cubic(1.0), &q).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn tiny_amplitude_mass_is_conserved() {
        let f = gaussian_field(0.5).scale(1e-3.into());
        let traj = evolve(&f, &cubic(0.0), &EvolveOptions::new(1.0, 0.01).snapshot_every(10)).unwrap();
        assert!(traj.relative_mass_drift() <= 1e-12);
    }

    #[test]
    fn zero_trajectory() {
        let l = make_lattice(0.5, 32.0).unwrap();
        let traj = evolve(&LatticeField::zeros(l), &cubic(1.0), &EvolveOptions::new(0.2, 0.01)).unwrap();
        assert!(traj.diagnostics.iter().all(|d| d.mass == 0.0 && d.energy == 0.0 && d.h1 == 0.0 && d.dplus == 0.0));
        assert!(traj.snapshots.iter().all(|s| s.field.sup_norm() == 0.0));
    }

    #[test]
    fn linear_flow_is_exact() {
        let f = gaussian_field(0.25);
        let spec = ProblemSpec::linear(1.0, Symbol::Lattice);
        let traj = evolve(&f, &spec, &EvolveOptions::new(1.0, 0.05)).unwrap();
        let want = crate::spectral::propagate(&f, 1.0, Symbol::Lattice);
        let got = traj.final_state().unwrap();
        assert!(got.sub(&want).unwrap().l2_norm() < 1e-12 * f.l2_norm());
        assert_eq!(traj.diagnostics.last().unwrap().t, 1.0);
    }

    #[test]
    fn snapshot_schedule() {
        let f = gaussian_field(0.5);
        let traj = evolve(&f, &cubic(1.0), &EvolveOptions::new(0.25, 0.01).snapshot_every(10)).unwrap();
        let ts: Vec<f64> = traj.diagnostics.iter().map(|d| d.t).collect();
        assert_eq!(traj.steps, 25);
        assert_eq!(ts.len(), 4);
        assert!((ts[3] - 0.25).abs() < 1e-15);
        assert!(traj.diagnostics.iter().all(|d| d.barrier.is_none()));
    }

    #[test]
    fn dav0_records_barrier() {
        let f = gaussian_field(0.5).scale(0.5.into());
        let traj = evolve(&f, &cubic(0.0), &EvolveOptions::new(0.2, 0.01)).unwrap();
        assert!(traj.diagnostics.iter().all(|d| d.barrier.unwrap() >= d.dplus));
    }

    #[test]
    fn blow_up_is_reported() {
        // far outside the admissible range with d_av = 0: D+ u grows quickly
        let l = make_lattice(0.25, 32.0).unwrap();
        let f = discretize(&InitialDatum::gaussian(3.0, 0.5, 0.0, 0.0).unwrap(), &l).unwrap();
        let spec = ProblemSpec::new(9.0, 0.0, Symbol::Lattice).unwrap();
        let mut opts = EvolveOptions::new(5.0, 0.001).quadrature(QuadratureSetting::Fixed(8));
        opts.blowup_factor = 2.0;
        let err = evolve(&f, &spec, &opts).unwrap_err();
        assert!(err.is_blow_up(), "{err}");
    }

    #[test]
    fn auto_nodes_escalate_with_bandwidth() {
        let smooth = gaussian_field(0.5);
        assert_eq!(select_nodes(&smooth, Symbol::Lattice, QuadratureSetting::default()), 32);
        let l = make_lattice(1.0 / 64.0, 32.0).unwrap();
        let rough = LatticeField::delta(l, 0.0, 1.0.into());
        // |sigma| at the Nyquist edge is 4 / h^2 = 16384 -> capped
        assert_eq!(select_nodes(&rough, Symbol::Lattice, QuadratureSetting::default()), MAX_NODES);
        assert_eq!(select_nodes(&rough, Symbol::Lattice, QuadratureSetting::Fixed(7)), 7);
    }
}
