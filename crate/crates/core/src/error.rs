use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice spacing must lie in (0, 1], got {0}")]
    InvalidSpacing(f64),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("lattice with {requested} points exceeds the cap of {cap}")]
    LatticeTooLarge { requested: usize, cap: usize },
    #[error("fields live on different lattices (h={left}, n={left_n} vs h={right}, n={right_n})")]
    LatticeMismatch {
        left: f64,
        left_n: usize,
        right: f64,
        right_n: usize,
    },
    #[error("grids are not nested: {0}")]
    NonNestedGrids(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("frequency {xi} lies outside the Brillouin zone [-{bound}, {bound}]")]
    OutsideBrillouinZone { xi: f64, bound: f64 },
    #[error("invalid initial datum: {0}")]
    InvalidDatum(String),
    #[error("initial datum does not decay at the boundary: |phi(±L/2)| / max|phi| = {ratio:e}")]
    BoundaryDecay { ratio: f64 },
    #[error("invalid quadrature rule: {0}")]
    InvalidQuadrature(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite values encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("blow-up at t = {t}: H1 norm {h1:e} exceeds ceiling {ceiling:e}")]
    BlowUp { t: f64, h1: f64, ceiling: f64 },
    #[error("run at h = {h} failed: {source}")]
    MemberRun {
        h: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),
    #[error("malformed field file {path}: {reason}")]
    FieldFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the trajectory itself (blow-up or overflow).
    pub fn is_blow_up(&self) -> bool {
        match self {
            Error::BlowUp { .. } | Error::NonFinite { .. } => true,
            Error::MemberRun { source, .. } => source.is_blow_up(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
