use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const COMMITTED: &str = include_str!("../../baselines.json");

/// Measured-and-frozen constants for the inequalities that only hold up to
/// an unspecified constant. Each is the worst value observed by the
/// calibration run times a margin; see `examples/calibrate.rs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baselines {
    /// `||f||_{L^4_h} / (||f||^{3/4} ||D+ f||^{1/4})`.
    pub gagliardo_nirenberg_l4: f64,
    /// `int_0^1 ||T_r f||^8_{L^8_h} dr / (||f||^7 ||D+ f||)`.
    pub strichartz_l8: f64,
    /// `||<Q>(f)||_{H^1_h} / ||f||^3_{H^1_h}` at `p = 3`.
    pub averaged_nonlinearity_h1: f64,
    /// `sup_h sup_t ||u_h(t)||_{H^1_h}` on the headline convergence run.
    pub uniform_h1_sup: f64,
}

impl Baselines {
    /// The constants shipped with the crate.
    pub fn committed() -> Self {
        Self::parse(COMMITTED).expect("committed baselines are well formed")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("baselines: {e}")))?;
        let all = [
            b.gagliardo_nirenberg_l4,
            b.strichartz_l8,
            b.averaged_nonlinearity_h1,
            b.uniform_h1_sup,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("baselines must be positive".into()));
        }
        Ok(b)
    }

    pub fn bound_for(&self, name: &str) -> Option<f64> {
        match name {
            "gagliardo_nirenberg_l4" => Some(self.gagliardo_nirenberg_l4),
            "strichartz_l8" => Some(self.strichartz_l8),
            "averaged_nonlinearity_h1" => Some(self.averaged_nonlinearity_h1),
            "uniform_h1_sup" => Some(self.uniform_h1_sup),
            _ => None,
        }
    }
}
