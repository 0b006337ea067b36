use std::fs;
use std::path::{Path, PathBuf};

use dmnls_core::analysis::{
    convergence_study, verify_inequalities, BandLimitedEnsemble, Baselines, StudyConfig,
};
use dmnls_core::dynamics::{evolve, EvolveOptions};
use dmnls_core::io::{write_diagnostics_csv, write_field_csv};
use dmnls_core::lattice::{discretize, make_lattice};
use log::{info, warn};
use serde::Serialize;
use thiserror::Error;

use crate::config::{parse_config, ConfigError, Mode, Validated};

/// Overrides the `output` key of the config.
pub const OUTPUT_ENV: &str = "DMNLS_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] dmnls_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Threshold(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Core(e) if e.is_blow_up() => 2,
            RunError::Threshold(_) => 3,
            _ => 1,
        }
    }
}

pub struct Options {
    pub workers: usize,
    /// Output directory from the environment, if set.
    pub output_override: Option<PathBuf>,
}

impl Options {
    pub fn from_env(workers: usize) -> Self {
        Self {
            workers,
            output_override: std::env::var_os(OUTPUT_ENV).map(PathBuf::from),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|source| RunError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn prepare_output(v: &Validated, opts: &Options) -> Result<PathBuf, RunError> {
    let dir = opts.output_override.clone().unwrap_or_else(|| v.config.output.clone());
    fs::create_dir_all(&dir).map_err(|source| RunError::Write {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

/// Parses `config_path`, runs `mode` and returns the files written.
pub fn run(mode: Mode, config_path: &Path, opts: &Options) -> Result<Vec<PathBuf>, RunError> {
    let text = fs::read_to_string(config_path).map_err(|source| ConfigError::Read {
        path: config_path.to_path_buf(),
        source,
    })?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let v = parse_config(&text, base, mode)?;
    if opts.workers == 0 {
        return Err(ConfigError::Invalid("--workers must be at least 1".into()).into());
    }
    for w in v.warnings() {
        warn!("{w}");
    }
    let dir = prepare_output(&v, opts)?;
    match mode {
        Mode::Simulate => simulate(&v, &dir),
        Mode::Converge => converge(&v, &dir, opts.workers),
        Mode::Verify => verify(&v, &dir, opts.workers),
    }
}

fn simulate(v: &Validated, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let c = &v.config;
    let datum = v.datum.as_ref().expect("validated");
    let lattice = make_lattice(c.h.expect("validated"), c.period_target)?;
    let phi = discretize(datum, &lattice)?;
    let mut opts = EvolveOptions::new(c.horizon.expect("validated"), c.dt)
        .snapshot_every(c.snapshot_every)
        .quadrature(v.quadrature);
    if v.spec.d_av == 0.0 {
        opts = opts.barrier_norms(datum.l2_norm(), datum.derivative_l2_norm());
    }
    let traj = evolve(&phi, &v.spec, &opts)?;
    info!(
        "{} steps of {:.3e}, M = {}, mass drift {:.3e}, energy drift {:.3e}",
        traj.steps,
        traj.dt,
        traj.quadrature_nodes,
        traj.relative_mass_drift(),
        traj.relative_energy_drift()
    );

    let mut written = Vec::new();
    let diag = dir.join("diagnostics.csv");
    write_diagnostics_csv(&diag, &traj.diagnostics)?;
    written.push(diag);
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let path = dir.join(format!("snapshot_{i:05}.csv"));
        write_field_csv(&path, &snap.field)?;
        written.push(path);
    }
    let echo = dir.join("config.json");
    write_json(&echo, c)?;
    written.push(echo);
    Ok(written)
}

fn converge(v: &Validated, dir: &Path, workers: usize) -> Result<Vec<PathBuf>, RunError> {
    let c = &v.config;
    let mut study = StudyConfig::new(
        c.p,
        c.d_av,
        c.horizon.expect("validated"),
        c.dt,
        c.h_list.clone().expect("validated"),
        c.h_ref.expect("validated"),
    );
    study.period_target = c.period_target;
    study.snapshot_every = c.snapshot_every;
    study.quadrature = v.quadrature;
    study.workers = workers;
    let mut report = convergence_study(v.datum.as_ref().expect("validated"), &study)?;
    report.config_echo = serde_json::to_value(c).expect("serializable");
    let path = dir.join("convergence.json");
    write_json(&path, &report)?;
    info!("slope {:.4}, errors {:?}", report.slope, report.errors);
    if !report.passes() {
        return Err(RunError::Threshold(format!(
            "convergence below threshold: slope {:.4}, monotone {} (report in {})",
            report.slope,
            report.is_monotone(),
            path.display()
        )));
    }
    Ok(vec![path])
}

fn verify(v: &Validated, dir: &Path, workers: usize) -> Result<Vec<PathBuf>, RunError> {
    let c = &v.config;
    let ensemble = BandLimitedEnsemble {
        seed: c.seed,
        samples: c.samples,
        period_target: c.period_target,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?;
    let reports = pool.install(|| {
        verify_inequalities(&ensemble, c.h_list.as_deref().expect("validated"), &Baselines::committed())
    })?;
    let path = dir.join("inequalities.json");
    write_json(&path, &reports)?;
    let echo = dir.join("config.json");
    write_json(&echo, c)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(RunError::Threshold(format!("inequalities failed: {}", failed.join(", "))));
    }
    Ok(vec![path, echo])
}
