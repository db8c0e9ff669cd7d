use std::fs;

use nearfield::simulator::{synthesize_calibration, CameraPose};
use nearfield::stripe::StripeDetector;

use super::{io_err, load_baseline, load_pipeline_config, load_scene, rig_setup, sim_error};
use crate::args::CalibrateArgs;
use crate::report::{ConfigDigest, RunReport};
use crate::CliError;

pub(crate) fn run(a: &CalibrateArgs) -> Result<RunReport, CliError> {
    let (intr, rig, roi) = rig_setup(a.calib.as_deref())?;
    let pose = match &a.scene {
        Some(p) => load_scene(p)?.camera,
        None => None,
    }
    .unwrap_or_else(|| CameraPose::default_for(&rig));
    if a.baseline_out.is_some() != a.baseline_frames.is_some() {
        return Err(CliError::config("--baseline-frames and --baseline-out go together"));
    }
    let digest = ConfigDigest::new("calibrate")
        .file("scene", a.scene.as_deref())
        .and_then(|d| d.file("calib", a.calib.as_deref()))
        .and_then(|d| d.file("config", a.config.as_deref()))
        .and_then(|d| d.file("baseline_frames", a.baseline_frames.as_deref()))
        .map_err(CliError::config)?
        .finish();
    let cal = synthesize_calibration(&pose, &intr, &rig, roi).map_err(sim_error)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&a.out, cal.to_json()).map_err(io_err(&a.out))?;

    let mut report = RunReport::new("calibrate", digest);
    report.extra("calib", a.out.display().to_string());
    if let (Some(frames), Some(out)) = (&a.baseline_frames, &a.baseline_out) {
        let cfg = load_pipeline_config(a.config.as_deref())?;
        let mut det = StripeDetector::new(cal, cfg).map_err(CliError::config)?;
        load_baseline(&mut det, frames)?;
        let b = det.baseline().expect("baseline was just set");
        let text = serde_json::to_string_pretty(b).expect("baseline serializes");
        fs::write(out, text).map_err(io_err(out))?;
        report.extra("baseline", out.display().to_string());
    }
    Ok(report)
}
