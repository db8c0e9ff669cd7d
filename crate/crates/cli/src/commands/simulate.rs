use std::fs;
use std::time::Instant;

use nearfield::exec::Execution;
use nearfield::simulator::{synthesize_calibration, CameraPose, Sequence};

use super::{io_err, load_scene, rig_setup, sim_error, SimFrame, SimManifest};
use crate::args::SimulateArgs;
use crate::report::{ConfigDigest, RunReport, TimingStats};
use crate::CliError;

pub(crate) fn run(a: &SimulateArgs) -> Result<RunReport, CliError> {
    let scene = load_scene(&a.scene)?;
    let (intr, rig, roi) = rig_setup(a.calib.as_deref())?;
    let pose = scene.camera.unwrap_or_else(|| CameraPose::default_for(&rig));
    let digest = ConfigDigest::new("simulate")
        .file("scene", Some(&a.scene))
        .and_then(|d| d.file("calib", a.calib.as_deref()))
        .map_err(CliError::config)?
        .value("seed", a.seed)
        .value("frames", a.frames)
        .value("fps", a.fps)
        .value("stencil", a.stencil)
        .finish();
    let seq = Sequence::new(scene, pose, intr, rig, a.fps, a.frames, a.seed).map_err(sim_error)?;
    let calib = synthesize_calibration(&pose, &intr, &rig, roi).map_err(sim_error)?;
    let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };

    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let calib_path = a.out.join("calib.json");
    fs::write(&calib_path, calib.to_json()).map_err(io_err(&calib_path))?;

    let mut report = RunReport::new("simulate", digest);
    let mut frames = Vec::with_capacity(seq.len());
    let mut times = Vec::with_capacity(seq.len());
    for i in 0..seq.len() {
        let t0 = Instant::now();
        let (frame, truth) = seq.render_frame(i, exec).map_err(sim_error)?;
        times.push(t0.elapsed().as_secs_f64() * 1e3);
        let stem = format!("frame_{i:05}");
        let (file, truth_file) = (format!("{stem}.png"), format!("{stem}.json"));
        let p = a.out.join(&file);
        frame.save_png(&p).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))?;
        let tp = a.out.join(&truth_file);
        fs::write(&tp, truth.to_json()).map_err(io_err(&tp))?;
        let stencil = if a.stencil {
            let name = format!("{stem}_stencil.png");
            let sp = a.out.join(&name);
            truth
                .save_stencil_png(&sp)
                .map_err(|e| CliError::runtime(format!("{}: {e}", sp.display())))?;
            Some(name)
        } else {
            None
        };
        report.count("frames", 1);
        report.count("occluded_frames", u64::from(!truth.gaps.is_empty()));
        frames.push(SimFrame {
            file,
            truth: truth_file,
            stencil,
            ts_ms: frame.timestamp_ms,
        });
    }
    let manifest = SimManifest {
        seed: a.seed,
        fps: a.fps,
        calib: "calib.json".into(),
        frames,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let mp = a.out.join("manifest.json");
    fs::write(&mp, &text).map_err(io_err(&mp))?;
    println!("{} frames -> {}", manifest.frames.len(), a.out.display());
    report.timing = TimingStats::from_ms(&times);
    report.extra("out", a.out.display().to_string());
    Ok(report)
}
