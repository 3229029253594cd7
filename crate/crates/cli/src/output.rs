use std::fs::{self, File};
use std::path::Path;

use meshshape::mesh_io::{write_mesh, write_svg};
use meshshape::optimizer::{IterationRecord, PhaseTimings};
use meshshape::{ConnectivityComplex, VertexConfig};

use crate::error::CliError;

pub const HISTORY_HEADER: [&str; 7] = ["iter", "Obj", "Penalty", "Total", "mshQua", "step", "backtracks"];

/// Row-at-a-time history writer; every row is flushed so an interrupted run
/// leaves a readable file.
pub struct HistoryWriter {
    inner: csv::Writer<File>,
}

impl HistoryWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(HISTORY_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, r: &IterationRecord) -> Result<(), CliError> {
        self.inner.write_record([
            r.iter.to_string(),
            r.objective.to_string(),
            r.penalty.to_string(),
            r.total.to_string(),
            r.theta.to_string(),
            r.step.to_string(),
            r.backtracks.to_string(),
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_history(path: &Path, rows: &[IterationRecord]) -> Result<(), CliError> {
    let mut w = HistoryWriter::create(path)?;
    rows.iter().try_for_each(|r| w.push(r))
}

pub fn write_timing(path: &Path, t: &PhaseTimings) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["phase", "seconds"])?;
    for (name, d) in t.rows() {
        w.write_record([name.to_string(), format!("{:.6}", d.as_secs_f64())])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_final(dir: &Path, complex: &ConnectivityComplex, q: &VertexConfig) -> Result<(), CliError> {
    write_mesh(dir.join("final.mesh"), complex, q)?;
    write_svg(dir.join("final.svg"), complex, q)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("creating {}: {e}", dir.display())))
}
