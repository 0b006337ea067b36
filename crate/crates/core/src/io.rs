//! CSV formats: fields as `x,re,im` and diagnostics as
//! `t,mass,energy,h1,dplus,barrier`, all with 17 significant digits.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::lattice::LatticeField;

pub const FIELD_HEADER: &str = "x,re,im";
pub const DIAGNOSTICS_HEADER: &str = "t,mass,energy,h1,dplus,barrier";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv(path: impl AsRef<Path>, f: &LatticeField) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{FIELD_HEADER}")?;
    for (x, z) in f.lattice().points().zip(f.values()) {
        writeln!(w, "{},{},{}", num(x), num(z.re), num(z.im))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv(path: impl AsRef<Path>, rows: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for d in rows {
        let barrier = d.barrier.map(num).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{barrier}",
            num(d.t),
            num(d.mass),
            num(d.energy),
            num(d.h1),
            num(d.dplus)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x,re,im` rows (header optional) with strictly increasing `x`.
pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let path = path.as_ref();
    let bad = |reason: String| Error::FieldFile {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.eq_ignore_ascii_case(FIELD_HEADER)) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(bad(format!("line {}: expected 3 columns, got {}", lineno + 1, cols.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("line {}: bad number {s:?}", lineno + 1)))
        };
        let x = parse(cols[0])?;
        if xs.last().is_some_and(|&prev| x <= prev) {
            return Err(bad(format!("line {}: x must increase", lineno + 1)));
        }
        xs.push(x);
        values.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    if xs.len() < 2 {
        return Err(bad("need at least two samples".into()));
    }
    Ok((xs, values))
}
