//! Measures the constants frozen in `baselines.json` and prints the headline
//! convergence numbers. Run with `cargo run --release --example calibrate`.

use dmnls_core::analysis::{convergence_study, verify_inequalities, BandLimitedEnsemble, Baselines, StudyConfig};
use dmnls_core::lattice::InitialDatum;

const SEED: u64 = 20_240_611;

fn main() -> dmnls_core::Result<()> {
    let reports = verify_inequalities(
        &BandLimitedEnsemble::new(SEED, 1000),
        &[1.0, 0.5, 0.25, 0.125],
        &Baselines::committed(),
    )?;
    for r in &reports {
        let per: Vec<String> = r.per_h.iter().map(|p| format!("{}:{:.6}", p.h, p.worst_ratio)).collect();
        println!("{:<40} worst {:.6}  [{}]", r.name, r.worst_ratio, per.join(" "));
    }

    let datum = InitialDatum::gaussian(1.0, 1.0, 0.0, 0.0)?;
    let mut cfg = StudyConfig::new(3.0, 1.0, 1.0, 0.002, vec![0.5, 0.25, 0.125, 0.0625], 1.0 / 128.0);
    cfg.workers = 4;
    let report = convergence_study(&datum, &cfg)?;
    println!("errors {:?}", report.errors);
    println!("slope {:.4} intercept {:.4}", report.slope, report.intercept);
    println!("reference self error {:.3e}", report.reference_self_error);
    for run in &report.runs {
        println!(
            "h={} M={} mass drift {:.3e} energy drift {:.3e} sup H1 {:.6}",
            run.h, run.quadrature_nodes, run.mass_drift, run.energy_drift, run.sup_h1
        );
    }
    Ok(())
}
