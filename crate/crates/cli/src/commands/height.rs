use std::io::Write;
use std::path::Path;

use nearfield::simulator::GroundTruth;
use nearfield::stripe::StripeDetector;
use nearfield::Frame;
use serde::Serialize;

use super::{load_baseline, load_calib, load_pipeline_config, open_output, parse_json, FrameSource};
use crate::args::{Format, HeightArgs};
use crate::report::{ConfigDigest, RunReport, TimingStats};
use crate::CliError;

#[derive(Debug, Serialize)]
struct HeightRow {
    frame: String,
    object: usize,
    pos_mm: f64,
    ground_truth_mm: Option<f64>,
    predicted_mm: f64,
    error_mm: Option<f64>,
    valid: bool,
}

/// Surface height of the obstacle hit nearest to `pos_mm` along the edge.
fn truth_height(gt: &GroundTruth, pos_mm: f64) -> Option<f64> {
    gt.columns
        .iter()
        .filter(|c| c.obstacle.is_some())
        .min_by(|a, b| (a.y_mm - pos_mm).abs().total_cmp(&(b.y_mm - pos_mm).abs()))
        .map(|c| c.surface_height_mm)
}

fn sidecar(frame: &Path) -> Result<GroundTruth, CliError> {
    parse_json(&frame.with_extension("json"))
}

pub(crate) fn run(a: &HeightArgs) -> Result<RunReport, CliError> {
    let cal = load_calib(&a.calib)?;
    let cfg = load_pipeline_config(a.config.as_deref())?;
    let mut det = StripeDetector::new(cal, cfg).map_err(CliError::config)?;
    load_baseline(&mut det, &a.baseline)?;
    let src = FrameSource::open(&a.frames, 50.0)?;
    let digest = ConfigDigest::new("height")
        .file("calib", Some(&a.calib))
        .and_then(|d| d.file("config", a.config.as_deref()))
        .and_then(|d| d.file("baseline", Some(&a.baseline)))
        .map_err(CliError::config)?
        .value("truth", a.truth)
        .finish();
    let mut report = RunReport::new("height", digest);

    let mut rows = Vec::new();
    let mut times = Vec::with_capacity(src.len());
    for (path, &ts) in src.files.iter().zip(&src.ts_ms) {
        let mut frame = Frame::load(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        frame.timestamp_ms = ts;
        let truth = if a.truth { Some(sidecar(path)?) } else { None };
        let t0 = std::time::Instant::now();
        let analysis = det.analyze(&frame).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        times.push(t0.elapsed().as_secs_f64() * 1e3);
        report.count("frames", 1);
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        for (k, h) in analysis.heights.iter().enumerate() {
            let gt = truth.as_ref().and_then(|t| truth_height(t, h.pos_mm));
            rows.push(HeightRow {
                frame: name.clone(),
                object: k,
                pos_mm: h.pos_mm,
                ground_truth_mm: gt,
                predicted_mm: h.h_obj_mm,
                error_mm: gt.map(|g| h.h_obj_mm - g),
                valid: h.valid,
            });
        }
    }
    report.count("objects", rows.len() as u64);
    report.count("valid", rows.iter().filter(|r| r.valid).count() as u64);
    let errs: Vec<f64> = rows.iter().filter(|r| r.valid).filter_map(|r| r.error_mm).collect();
    if !errs.is_empty() {
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        report.extra("rmse_mm", rmse);
        report.extra("max_abs_error_mm", errs.iter().fold(0.0f64, |m, e| m.max(e.abs())));
    }

    let mut out = open_output(a.out.as_deref())?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rows).map_err(CliError::runtime)?;
            out.write_all(b"\n").map_err(CliError::runtime)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            if rows.is_empty() {
                w.write_record(["frame", "object", "pos_mm", "ground_truth_mm", "predicted_mm", "error_mm", "valid"])
                    .map_err(CliError::runtime)?;
            }
            for r in &rows {
                w.serialize(r).map_err(CliError::runtime)?;
            }
            w.flush().map_err(CliError::runtime)?;
        }
    }
    out.flush().map_err(CliError::runtime)?;
    report.timing = TimingStats::from_ms(&times);
    Ok(report)
}
