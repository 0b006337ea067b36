use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{blowup_horizon, fit_loglog_slope};
use crate::dynamics::{evolve, EvolveOptions, ProblemSpec, QuadratureSetting, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{
    discretize, interpolate, make_lattice, ContinuumField, InitialDatum, Lattice, LatticeField,
};
use crate::spectral::Symbol;

/// Smallest fitted order accepted by the headline study.
pub const MIN_SLOPE: f64 = 0.45;

/// `||p_h f - ref||_{L^2}` with the rectangle rule on the reference grid.
pub fn l2_error(f: &LatticeField, reference: &ContinuumField) -> Result<f64> {
    let p = interpolate(f, reference.grid())?;
    Ok(p.as_samples().sub(reference.as_samples())?.l2_norm())
}

/// Everything a continuum-limit study needs besides the datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub p: f64,
    pub d_av: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub h_list: Vec<f64>,
    pub h_ref: f64,
    pub period_target: f64,
    pub snapshot_every: usize,
    pub quadrature: QuadratureSetting,
    pub workers: usize,
    /// `false` compares the free flows only.
    pub nonlinear: bool,
    /// How many times `h_ref` may be halved when errors fail to decrease.
    pub max_escalations: usize,
}

impl StudyConfig {
    pub fn new(p: f64, d_av: f64, horizon: f64, dt: f64, h_list: Vec<f64>, h_ref: f64) -> Self {
        Self {
            p,
            d_av,
            horizon,
            dt,
            h_list,
            h_ref,
            period_target: 32.0,
            snapshot_every: 20,
            quadrature: QuadratureSetting::default(),
            workers: 1,
            nonlinear: true,
            max_escalations: 2,
        }
    }

    fn spec(&self, symbol: Symbol) -> Result<ProblemSpec> {
        let mut spec = ProblemSpec::new(self.p, self.d_av, symbol)?;
        spec.nonlinear = self.nonlinear;
        Ok(spec)
    }

    fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions::new(self.horizon, self.dt)
            .snapshot_every(self.snapshot_every)
            .quadrature(self.quadrature)
    }

    fn validate(&self, datum: &InitialDatum) -> Result<()> {
        if self.h_list.len() < 3 {
            return Err(Error::InvalidArgument(
                "a convergence study needs at least 3 spacings".into(),
            ));
        }
        if self.h_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidArgument("h_list must be strictly decreasing".into()));
        }
        let h_min = *self.h_list.last().expect("nonempty");
        if !(self.h_ref > 0.0 && self.h_ref <= 0.25 * h_min) {
            return Err(Error::InvalidArgument(format!(
                "h_ref = {} must be positive and at most min(h_list) / 4 = {}",
                self.h_ref,
                0.25 * h_min
            )));
        }
        if self.d_av == 0.0 && self.nonlinear {
            let t_star = blowup_horizon(datum.l2_norm(), datum.derivative_l2_norm(), self.p);
            if self.horizon >= t_star {
                return Err(Error::InvalidArgument(format!(
                    "d_av = 0 study needs T < T* = {t_star}, got {}",
                    self.horizon
                )));
            }
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub h: f64,
    pub n: usize,
    pub quadrature_nodes: usize,
    pub steps: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub sup_h1: f64,
    pub sup_dplus: f64,
}

impl RunSummary {
    fn of(lattice: &Lattice, traj: &Trajectory) -> Self {
        Self {
            h: lattice.spacing(),
            n: lattice.len(),
            quadrature_nodes: traj.quadrature_nodes,
            steps: traj.steps,
            mass_drift: traj.relative_mass_drift(),
            energy_drift: traj.relative_energy_drift(),
            sup_h1: traj.sup_h1(),
            sup_dplus: traj.diagnostics.iter().map(|d| d.dplus).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub h_list: Vec<f64>,
    /// `sup_t ||p_h u_h(t) - u_ref(t)||_{L^2}` per spacing.
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Reference spacing actually used, after any escalation.
    pub h_ref: f64,
    pub reference_escalations: usize,
    /// `sup_t` distance between the references at `h_ref` and `2 h_ref`.
    pub reference_self_error: f64,
    pub reference: RunSummary,
    pub runs: Vec<RunSummary>,
    pub config_echo: serde_json::Value,
}

impl ConvergenceReport {
    pub fn is_monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn passes(&self) -> bool {
        self.slope >= MIN_SLOPE && self.is_monotone()
    }
}

struct Reference {
    lattice: Lattice,
    traj: Trajectory,
}

fn run_reference(datum: &InitialDatum, cfg: &StudyConfig, h_ref: f64) -> Result<Reference> {
    let lattice = make_lattice(h_ref, cfg.period_target)?;
    datum.check_decay(&lattice)?;
    let phi = LatticeField::from_fn(lattice, |x| datum.eval(x));
    let traj = evolve(&phi, &cfg.spec(Symbol::Continuum)?, &cfg.evolve_options())
        .map_err(|e| Error::MemberRun {
            h: h_ref,
            source: Box::new(e),
        })?;
    Ok(Reference { lattice, traj })
}

/// Runs the lattice equation at spacing `h` from the cell averages of `datum`
/// and returns the sup-in-time error against `reference` snapshots.
pub fn lattice_run_error(
    datum: &InitialDatum,
    cfg: &StudyConfig,
    h: f64,
    reference: &[ContinuumField],
) -> Result<(f64, RunSummary)> {
    let wrap = |e: Error| Error::MemberRun {
        h,
        source: Box::new(e),
    };
    let lattice = make_lattice(h, cfg.period_target).map_err(wrap)?;
    let phi = discretize(datum, &lattice).map_err(wrap)?;
    let traj = evolve(&phi, &cfg.spec(Symbol::Lattice)?, &cfg.evolve_options()).map_err(wrap)?;
    if traj.snapshots.len() != reference.len() {
        return Err(wrap(Error::InvalidArgument(format!(
            "snapshot count {} differs from reference {}",
            traj.snapshots.len(),
            reference.len()
        ))));
    }
    let mut sup: f64 = 0.0;
    for (snap, r) in traj.snapshots.iter().zip(reference) {
        sup = sup.max(l2_error(&snap.field, r).map_err(wrap)?);
    }
    Ok((sup, RunSummary::of(&lattice, &traj)))
}

fn reference_fields(r: &Reference) -> Vec<ContinuumField> {
    r.traj
        .snapshots
        .iter()
        .map(|s| ContinuumField::from_samples(s.field.clone()))
        .collect()
}

/// Sup over shared snapshots of the distance between a reference and its
/// two-times-finer counterpart restricted to the coarser grid.
fn reference_gap(coarse: &Reference, fine: &Reference) -> f64 {
    coarse
        .traj
        .snapshots
        .iter()
        .zip(&fine.traj.snapshots)
        .map(|(c, f)| {
            let restricted: Vec<_> = f.field.values().iter().step_by(2).copied().collect();
            let restricted = LatticeField::new(coarse.lattice, restricted).expect("nested grids");
            c.field.sub(&restricted).expect("same lattice").l2_norm()
        })
        .fold(0.0, f64::max)
}

/// Compares the lattice equation at each `h` in `cfg.h_list` with a
/// pseudospectral continuum-symbol reference at `cfg.h_ref`.
pub fn convergence_study(datum: &InitialDatum, cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate(datum)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    // every member grid must nest inside the reference grid
    let base = make_lattice(cfg.h_ref, cfg.period_target)?;
    for &h in &cfg.h_list {
        let l = make_lattice(h, cfg.period_target)?;
        if (l.period() - base.period()).abs() > 1e-12 * base.period() {
            return Err(Error::NonNestedGrids(format!(
                "h = {h} gives period {} instead of {}",
                l.period(),
                base.period()
            )));
        }
    }

    let mut h_ref = cfg.h_ref;
    let mut escalations = 0;
    loop {
        let (reference, check) = pool.install(|| {
            rayon::join(
                || run_reference(datum, cfg, h_ref),
                || run_reference(datum, cfg, 2.0 * h_ref),
            )
        });
        let (reference, check) = (reference?, check?);
        let fields = reference_fields(&reference);
        let results: Vec<Result<(f64, RunSummary)>> = pool.install(|| {
            cfg.h_list
                .par_iter()
                .map(|&h| lattice_run_error(datum, cfg, h, &fields))
                .collect()
        });
        let mut errors = Vec::with_capacity(results.len());
        let mut runs = Vec::with_capacity(results.len());
        for r in results {
            let (e, s) = r?;
            info!("h = {:<10} error = {e:.6e}", s.h);
            errors.push(e);
            runs.push(s);
        }
        let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
        if !monotone && escalations < cfg.max_escalations {
            escalations += 1;
            h_ref *= 0.5;
            warn!("errors not monotone in h; refining reference to h_ref = {h_ref}");
            continue;
        }
        let points: Vec<(f64, f64)> = cfg.h_list.iter().copied().zip(errors.iter().copied()).collect();
        let (slope, intercept) = fit_loglog_slope(&points)?;
        return Ok(ConvergenceReport {
            h_list: cfg.h_list.clone(),
            errors,
            slope,
            intercept,
            horizon: cfg.horizon,
            h_ref,
            reference_escalations: escalations,
            reference_self_error: reference_gap(&check, &reference),
            reference: RunSummary::of(&reference.lattice, &reference.traj),
            runs,
            config_echo: serde_json::Value::Null,
        });
    }
}

/// Observed temporal order from three runs at `dt`, `dt/2`, `dt/4`:
/// `log2(|u_dt - u_{dt/2}| / |u_{dt/2} - u_{dt/4}|)` at the horizon.
pub fn temporal_order(
    phi: &LatticeField,
    spec: &ProblemSpec,
    horizon: f64,
    dt: f64,
    quadrature: QuadratureSetting,
) -> Result<f64> {
    let finals: Vec<LatticeField> = [dt, 0.5 * dt, 0.25 * dt]
        .iter()
        .map(|&step| {
            let opts = EvolveOptions::new(horizon, step)
                .snapshot_every(usize::MAX)
                .quadrature(quadrature)
                .keep_snapshots(true);
            evolve(phi, spec, &opts).map(|t| t.final_state().expect("final snapshot").clone())
        })
        .collect::<Result<_>>()?;
    // auto node selection sees the same phi each time, so all three runs share nodes
    let coarse = finals[0].sub(&finals[1])?.l2_norm();
    let fine = finals[1].sub(&finals[2])?.l2_norm();
    Ok((coarse / fine).log2())
}
