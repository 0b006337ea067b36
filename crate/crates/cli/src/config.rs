//! Run configuration: one flat JSON object shared by all three subcommands.

use std::path::{Path, PathBuf};

use dmnls_core::analysis::blowup_horizon;
use dmnls_core::dynamics::{ProblemSpec, QuadratureSetting, DEFAULT_NODES};
use dmnls_core::lattice::InitialDatum;
use dmnls_core::spectral::Symbol;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Converge,
    Verify,
}

/// `"auto"` or a fixed node count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quadrature {
    Fixed(usize),
    Named(String),
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Named("auto".into())
    }
}

impl Quadrature {
    fn setting(&self) -> Result<QuadratureSetting, ConfigError> {
        match self {
            Quadrature::Fixed(0) => Err(ConfigError::Invalid("quadrature must be positive".into())),
            Quadrature::Fixed(m) => Ok(QuadratureSetting::Fixed(*m)),
            Quadrature::Named(s) if s == "auto" => Ok(QuadratureSetting::Auto {
                base: DEFAULT_NODES,
            }),
            Quadrature::Named(s) => Err(ConfigError::Invalid(format!(
                "quadrature must be \"auto\" or an integer, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Initial {
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        velocity: f64,
    },
    Sech {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// `x,re,im` samples; relative paths resolve against the config file.
    File { path: PathBuf },
}

fn default_period() -> f64 {
    32.0
}
fn default_dt() -> f64 {
    0.005
}
fn default_snapshot_every() -> usize {
    20
}
fn default_samples() -> usize {
    1000
}
fn default_seed() -> u64 {
    0
}
fn default_output() -> PathBuf {
    PathBuf::from("output")
}
fn default_verify_h() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default = "three")]
    pub p: f64,
    #[serde(default = "one")]
    pub d_av: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ref: Option<f64>,
    #[serde(rename = "L_target", default = "default_period")]
    pub period_target: f64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Spatial symbol for `simulate`; `converge` always pairs both.
    #[serde(default = "lattice_symbol")]
    pub symbol: Symbol,
}

fn three() -> f64 {
    3.0
}
fn one() -> f64 {
    1.0
}
fn lattice_symbol() -> Symbol {
    Symbol::Lattice
}

/// A config checked against one subcommand, with file paths resolved.
#[derive(Debug, Clone)]
pub struct Validated {
    pub mode: Mode,
    pub config: RunConfig,
    pub spec: ProblemSpec,
    pub quadrature: QuadratureSetting,
    pub datum: Option<InitialDatum>,
}

pub fn parse_config(text: &str, base_dir: &Path, mode: Mode) -> Result<Validated, ConfigError> {
    let mut config: RunConfig = serde_json::from_str(text)?;
    if let Some(declared) = config.mode {
        if declared != mode {
            return Err(ConfigError::Invalid(format!(
                "config declares mode {declared:?} but was run as {mode:?}"
            )));
        }
    }
    config.mode = Some(mode);
    let invalid = |msg: String| ConfigError::Invalid(msg);
    let spec = ProblemSpec::new(config.p, config.d_av, config.symbol)
        .map_err(|e| invalid(e.to_string()))?;
    let quadrature = config.quadrature.setting()?;
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(invalid(format!("dt must be positive, got {}", config.dt)));
    }
    if config.snapshot_every == 0 {
        return Err(invalid("snapshot_every must be at least 1".into()));
    }
    let positive = |name: &str, v: Option<f64>| match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(invalid(format!("{name} must be positive, got {x}"))),
        None => Err(invalid(format!("{name} is required for {mode:?}"))),
    };

    let datum = match mode {
        Mode::Simulate | Mode::Converge => {
            positive("T", config.horizon)?;
            let initial = config
                .initial
                .as_ref()
                .ok_or_else(|| invalid(format!("initial is required for {mode:?}")))?;
            Some(build_datum(initial, base_dir)?)
        }
        Mode::Verify => None,
    };
    match mode {
        Mode::Simulate => {
            positive("h", config.h)?;
        }
        Mode::Converge => {
            if config.h_list.is_none() {
                return Err(invalid("h_list is required for Converge".into()));
            }
            positive("h_ref", config.h_ref)?;
        }
        Mode::Verify => {
            let list = config.h_list.get_or_insert_with(default_verify_h);
            if list.is_empty() {
                return Err(invalid("h_list must not be empty".into()));
            }
            if config.samples == 0 {
                return Err(invalid("samples must be at least 1".into()));
            }
        }
    }
    Ok(Validated {
        mode,
        config,
        spec,
        quadrature,
        datum,
    })
}

fn build_datum(initial: &Initial, base_dir: &Path) -> Result<InitialDatum, ConfigError> {
    let datum = match initial {
        Initial::Gaussian {
            amplitude,
            width,
            center,
            velocity,
        } => InitialDatum::gaussian(*amplitude, *width, *center, *velocity),
        Initial::Sech {
            amplitude,
            width,
            center,
            velocity,
        } => InitialDatum::sech(*amplitude, *width, *center, *velocity),
        Initial::File { path } => InitialDatum::from_file(base_dir.join(path)),
    };
    datum.map_err(|e| ConfigError::Invalid(e.to_string()))
}

impl Validated {
    /// Problems worth flagging that do not stop the run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(w) = self.spec.admissibility_warning() {
            out.push(w);
        }
        if let (Some(datum), Some(t)) = (&self.datum, self.config.horizon) {
            if self.spec.d_av == 0.0 && self.spec.nonlinear {
                let t_star = blowup_horizon(datum.l2_norm(), datum.derivative_l2_norm(), self.spec.p);
                if t >= t_star {
                    out.push(format!(
                        "T = {t} is at or beyond the d_av = 0 threshold T* = {t_star:.6}; the H1 bound no longer applies"
                    ));
                }
            }
        }
        out
    }
}
