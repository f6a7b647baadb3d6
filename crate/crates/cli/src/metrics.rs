//! Solver traces as CSV.

use std::path::Path;

use dotreg::solver::SolverTrace;

use crate::error::{CliError, Result};

pub const TRACE_HEADER: [&str; 8] = ["iter", "objective", "misfit", "energy", "mass", "residual", "gap", "seconds"];

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::artifact(path, format!("{other:?}")),
    }
}

/// Write a CSV with the given header and rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per recorded iterate. Wall-clock seconds are left empty when
/// `with_time` is false so that reruns are byte-identical.
pub fn write_trace(path: &Path, trace: &SolverTrace<f64>, with_time: bool) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .rows
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                num(r.objective),
                num(r.misfit),
                num(r.energy),
                num(r.mass),
                num(r.residual),
                num(r.gap),
                if with_time { format!("{:.6}", r.seconds) } else { String::new() },
            ]
        })
        .collect();
    write_csv(path, &TRACE_HEADER, &rows)
}
