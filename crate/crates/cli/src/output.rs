//! CSV and JSON files written by the runner. Numbers use Rust's shortest
//! round-trip formatting, which is exact and locale independent.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use bohm2p_core::ensemble::Ensemble;
use bohm2p_core::statistics::MarginalHistogram;
use bohm2p_core::wavefunction::ConfigPoint;
use serde::Serialize;

use crate::CliError;

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(io_error(path))?))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

/// `y` column value; empty for one-dimensional models.
fn y(r: &[f64]) -> String {
    r.get(1).map(|v| v.to_string()).unwrap_or_default()
}

/// `pair_id,t,x1,y1,x2,y2,status`, one row per pair and grid time.
pub fn write_trajectories(path: &Path, ensemble: &Ensemble) -> Result<(), CliError> {
    let err = io_error(path);
    let mut w = create(path)?;
    writeln!(w, "pair_id,t,x1,y1,x2,y2,status").map_err(&err)?;
    for (id, traj) in ensemble.trajectories.iter().enumerate() {
        let status = traj.status.as_str();
        for p in &traj.points {
            writeln!(w, "{id},{},{},{},{},{},{status}", p.t, p.r1[0], y(&p.r1), p.r2[0], y(&p.r2)).map_err(&err)?;
        }
    }
    w.flush().map_err(&err)
}

/// `coordinate,t,bin_low,bin_high,count,quantum_density`.
pub fn write_marginals(path: &Path, histograms: &[MarginalHistogram]) -> Result<(), CliError> {
    let err = io_error(path);
    let mut w = create(path)?;
    writeln!(w, "coordinate,t,bin_low,bin_high,count,quantum_density").map_err(&err)?;
    for h in histograms {
        for b in &h.bins {
            let q = b.quantum_density.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{},{q}", h.coordinate.name(), h.t, b.low, b.high, b.count).map_err(&err)?;
        }
    }
    w.flush().map_err(&err)
}

/// `pair_id,x1,y1,x2,y2` for initial configurations.
pub fn write_samples(path: &Path, points: &[ConfigPoint]) -> Result<(), CliError> {
    let err = io_error(path);
    let mut w = create(path)?;
    writeln!(w, "pair_id,x1,y1,x2,y2").map_err(&err)?;
    for (id, p) in points.iter().enumerate() {
        writeln!(w, "{id},{},{},{},{}", p.r1[0], y(&p.r1), p.r2[0], y(&p.r2)).map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let err = io_error(path);
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    writeln!(w).map_err(&err)?;
    w.flush().map_err(&err)
}
