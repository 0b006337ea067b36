use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BandLimitedEnsemble, Baselines, TrigPolynomial};
use crate::dynamics::{select_nodes, Dynamics, ProblemSpec, QuadratureSetting};
use crate::error::{Error, Result};
use crate::lattice::{discretize_with, make_lattice, Lattice};
use crate::quadrature::QuadratureRule;
use crate::spectral::Symbol;

/// Rounding allowance for the inequalities with an exact constant.
pub const EXACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Sharp constant known in closed form.
    Exact,
    /// Frozen empirical constant, tested for uniformity in `h`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HRatio {
    pub h: f64,
    pub worst_ratio: f64,
}

/// Worst `LHS / RHS` of one inequality over an ensemble and an `h` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub kind: BoundKind,
    pub samples: usize,
    pub worst_ratio: f64,
    pub bound: f64,
    pub pass: bool,
    pub per_h: Vec<HRatio>,
}

struct Check {
    name: &'static str,
    kind: BoundKind,
    bound: f64,
}

fn checks(b: &Baselines) -> [Check; 8] {
    let exact = |name| Check {
        name,
        kind: BoundKind::Exact,
        bound: 1.0,
    };
    let uniform = |name, bound| Check {
        name,
        kind: BoundKind::Uniform,
        bound,
    };
    [
        exact("norm_equivalence_upper"),
        exact("norm_equivalence_lower"),
        exact("gagliardo_nirenberg_infinity"),
        exact("discretization_l2_contraction"),
        exact("discretization_derivative_contraction"),
        uniform("gagliardo_nirenberg_l4", b.gagliardo_nirenberg_l4),
        uniform("strichartz_l8", b.strichartz_l8),
        uniform("averaged_nonlinearity_h1", b.averaged_nonlinearity_h1),
    ]
}

/// All eight ratios of one member on one lattice, in [`checks`] order.
fn ratios(t: &TrigPolynomial, lattice: &Lattice, dynamics: &Dynamics) -> Result<[f64; 8]> {
    let f = t.sample(lattice)?;
    let l2 = f.l2_norm();
    let dplus = f.forward_diff().l2_norm();
    let hdot1 = f.hs_norm(1.0, true);
    let h1 = f.h1_norm();
    let f_h = discretize_with(lattice, |x| t.eval(x));

    let q = dynamics.averaged_nonlinearity(&f)?;
    Ok([
        dplus / hdot1,
        (2.0 / PI) * hdot1 / dplus,
        f.sup_norm() / (l2 * dplus).sqrt(),
        f_h.l2_norm() / t.l2_norm(),
        f_h.forward_diff().l2_norm() / t.derivative_l2_norm(),
        f.lp_norm(4.0)? / (l2.powf(0.75) * dplus.powf(0.25)),
        dynamics.averaged_lq(&f, 8.0)? / (l2.powi(7) * dplus),
        q.h1_norm() / h1.powi(3),
    ])
}

/// Runs every verifier over `ensemble` at each spacing in `h_list`.
///
/// Members that vanish or have no derivative (constants) are skipped; the
/// ensemble is degenerate if nothing is left.
pub fn verify_inequalities(
    ensemble: &BandLimitedEnsemble,
    h_list: &[f64],
    baselines: &Baselines,
) -> Result<Vec<InequalityReport>> {
    if h_list.is_empty() {
        return Err(Error::InvalidArgument("h_list is empty".into()));
    }
    let members: Vec<TrigPolynomial> = ensemble
        .members()?
        .into_iter()
        .filter(|t| !t.is_zero() && t.derivative_l2_norm() > 0.0)
        .collect();
    if members.is_empty() {
        return Err(Error::DegenerateEnsemble(format!(
            "no usable fields among {} samples",
            ensemble.samples
        )));
    }
    let checks = checks(baselines);
    let mut per_h: Vec<[f64; 8]> = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let lattice = make_lattice(h, ensemble.period_target)?;
        let spec = ProblemSpec::new(3.0, 0.0, Symbol::Lattice)?;
        let nodes = members
            .iter()
            .map(|t| Ok(select_nodes(&t.sample(&lattice)?, Symbol::Lattice, QuadratureSetting::default())))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .expect("nonempty");
        let dynamics = Dynamics::new(lattice, spec, QuadratureRule::gauss_legendre(nodes)?);
        let worst = members
            .par_iter()
            .map(|t| ratios(t, &lattice, &dynamics))
            .try_reduce(|| [f64::NEG_INFINITY; 8], |a, b| {
                let mut out = a;
                out.iter_mut().zip(b).for_each(|(x, y)| *x = x.max(y));
                Ok(out)
            })?;
        per_h.push(worst);
    }

    Ok(checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let per: Vec<HRatio> = h_list
                .iter()
                .zip(&per_h)
                .map(|(&h, w)| HRatio {
                    h,
                    worst_ratio: w[i],
                })
                .collect();
            let worst = per.iter().map(|r| r.worst_ratio).fold(f64::NEG_INFINITY, f64::max);
            let pass = worst.is_finite()
                && match c.kind {
                    BoundKind::Exact => worst <= c.bound + EXACT_SLACK,
                    BoundKind::Uniform => worst < c.bound,
                };
            InequalityReport {
                name: c.name.to_string(),
                kind: c.kind,
                samples: members.len(),
                worst_ratio: worst,
                bound: c.bound,
                pass,
                per_h: per,
            }
        })
        .collect())
}
