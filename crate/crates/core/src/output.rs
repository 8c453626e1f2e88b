//! Run artifacts on disk.
//!
//! A run directory holds `resolved_config.toml`, `diagnostics.csv`,
//! `report.txt`, `report.csv` and `snapshots/` with one CSV per stored state
//! plus `snapshots/index.csv` mapping file names to times.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::analysis::EstimateReport;
use crate::config::RunConfig;
use crate::error::{ModelError, Result};
use crate::model::{Grid, Species, StateVector, Trajectory};

fn csv_err(e: csv::Error) -> ModelError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ModelError::Io(io),
        other => ModelError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Columns `depth_m,N,P,Z,D` at the cell centers.
pub fn write_snapshot(path: &Path, state: &StateVector, grid: &Grid) -> Result<()> {
    state.check(grid.n_cells())?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["depth_m"];
    header.extend(Species::ALL.iter().map(|s| s.symbol()));
    w.write_record(&header).map_err(csv_err)?;
    for (i, x) in grid.centers().iter().enumerate() {
        let c = state.cell(i);
        w.write_record([x.to_string(), c[0].to_string(), c[1].to_string(), c[2].to_string(), c[3].to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t_day,total_N,L2,H1,min_conc,bottom_export`, one row per step.
pub fn write_diagnostics(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t_day", "total_N", "L2", "H1", "min_conc", "bottom_export"])
        .map_err(csv_err)?;
    for d in &traj.diagnostics {
        w.write_record([
            d.t.to_string(),
            d.total_n.to_string(),
            d.l2.to_string(),
            d.h1.to_string(),
            d.min_conc.to_string(),
            d.bottom_export.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(dir: &Path, report: &EstimateReport) -> Result<()> {
    fs::write(dir.join("report.txt"), report.to_key_value())?;
    fs::write(dir.join("report.csv"), report.to_csv())?;
    Ok(())
}

pub fn write_config(dir: &Path, config: &RunConfig) -> Result<()> {
    let mut f = fs::File::create(dir.join("resolved_config.toml"))?;
    f.write_all(config.to_toml_string()?.as_bytes())?;
    Ok(())
}

/// Writes diagnostics and all snapshots of `traj` into `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, grid: &Grid) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_diagnostics(&dir.join("diagnostics.csv"), traj)?;
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut index = csv::Writer::from_path(snap_dir.join("index.csv")).map_err(csv_err)?;
    index.write_record(["file", "t_day"]).map_err(csv_err)?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:05}.csv");
        write_snapshot(&snap_dir.join(&name), s, grid)?;
        index.write_record([name, s.t.to_string()]).map_err(csv_err)?;
    }
    index.flush()?;
    Ok(())
}
