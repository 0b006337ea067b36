//! Continuum-limit convergence studies, the `d_av = 0` barrier, log-log
//! fitting and the inequality verifiers.

mod baselines;
mod convergence;
mod ensemble;
mod inequalities;

pub use baselines::Baselines;
pub use convergence::{
    convergence_study, l2_error, lattice_run_error, temporal_order, ConvergenceReport, RunSummary,
    StudyConfig, MIN_SLOPE,
};
pub use ensemble::{BandLimitedEnsemble, TrigPolynomial};
pub use inequalities::{verify_inequalities, BoundKind, HRatio, InequalityReport, EXACT_SLACK};

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Value of the `d_av = 0` barrier at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    /// `+inf` at or beyond the threshold horizon.
    pub value: f64,
    pub past_threshold: bool,
}

/// `(||phi'||^{-a} - a ||phi||^a t)^{-1/a}` with `a = (p - 1) / 2`.
pub fn barrier_dav0(t: f64, phi_l2: f64, phi_dl2: f64, p: f64) -> Barrier {
    let a = 0.5 * (p - 1.0);
    let base = phi_dl2.powf(-a) - a * phi_l2.powf(a) * t;
    if base > 0.0 {
        Barrier {
            value: base.powf(-1.0 / a),
            past_threshold: false,
        }
    } else {
        Barrier {
            value: f64::INFINITY,
            past_threshold: true,
        }
    }
}

/// `T* = (2 / (p - 1)) (||phi|| ||phi'||)^{-(p-1)/2}`; infinite for the zero datum.
pub fn blowup_horizon(phi_l2: f64, phi_dl2: f64, p: f64) -> f64 {
    let a = 0.5 * (p - 1.0);
    (phi_l2 * phi_dl2).powf(-a) / a
}

/// Snapshots before `fraction * T*` where `||D+ u(t)||` exceeds the barrier.
pub fn barrier_violations(traj: &Trajectory, t_star: f64, fraction: f64) -> usize {
    traj.diagnostics
        .iter()
        .filter(|d| d.t < fraction * t_star)
        .filter(|d| d.barrier.is_some_and(|b| d.dplus > b))
        .count()
}

/// Least-squares fit of `log e = slope log h + log intercept`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "log-log fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "log-log fit needs positive finite values".into(),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("log-log fit needs distinct spacings".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, (my - slope * mx).exp()))
}
