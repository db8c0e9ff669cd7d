use std::io::Write;

use nearfield::exec::Execution;
use nearfield::simulator::{placement_sweep, CameraPose};
use serde::Serialize;

use super::{load_scene, open_output, parse_json, rig_setup, sim_error};
use crate::args::{Format, SweepArgs};
use crate::report::{ConfigDigest, RunReport};
use crate::CliError;

/// Flat form of a sweep row for CSV.
#[derive(Debug, Serialize)]
struct FlatRow {
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
    tilt_deg: f64,
    column: usize,
    floor_row: f64,
    obstacle_row: f64,
    displacement_px: f64,
    predicted_px: Option<f64>,
}

pub(crate) fn run(a: &SweepArgs) -> Result<RunReport, CliError> {
    let scene = load_scene(&a.scene)?;
    let poses: Vec<CameraPose> = parse_json(&a.poses)?;
    if poses.len() < 2 {
        return Err(CliError::config(format!(
            "{}: need at least 2 poses, got {}",
            a.poses.display(),
            poses.len()
        )));
    }
    let (intr, rig, _) = rig_setup(a.calib.as_deref())?;
    let digest = ConfigDigest::new("sweep")
        .file("scene", Some(&a.scene))
        .and_then(|d| d.file("poses", Some(&a.poses)))
        .and_then(|d| d.file("calib", a.calib.as_deref()))
        .map_err(CliError::config)?
        .finish();
    let rows = placement_sweep(&scene, &poses, &intr, &rig, Execution::default()).map_err(sim_error)?;

    let mut out = open_output(a.out.as_deref())?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rows).map_err(CliError::runtime)?;
            out.write_all(b"\n").map_err(CliError::runtime)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in &rows {
                w.serialize(FlatRow {
                    x_mm: r.pose.x_mm,
                    y_mm: r.pose.y_mm,
                    z_mm: r.pose.z_mm,
                    tilt_deg: r.pose.tilt_deg,
                    column: r.column,
                    floor_row: r.floor_row,
                    obstacle_row: r.obstacle_row,
                    displacement_px: r.displacement_px,
                    predicted_px: r.predicted_px,
                })
                .map_err(CliError::runtime)?;
            }
            w.flush().map_err(CliError::runtime)?;
        }
    }
    out.flush().map_err(CliError::runtime)?;
    let mut report = RunReport::new("sweep", digest);
    report.count("poses", rows.len() as u64);
    if let (Some(lo), Some(hi)) = (
        rows.iter().map(|r| r.displacement_px).reduce(f64::min),
        rows.iter().map(|r| r.displacement_px).reduce(f64::max),
    ) {
        report.extra("displacement_px_range", [lo, hi]);
    }
    Ok(report)
}
