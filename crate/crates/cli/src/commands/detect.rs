use std::io::Write;
use std::time::Instant;

use nearfield::stripe::{PerceptionEvent, PipelineError, StripeDetector};
use nearfield::Frame;

use super::{load_baseline, load_calib, load_pipeline_config, open_output, FrameSource};
use crate::args::DetectArgs;
use crate::report::{ConfigDigest, RunReport, TimingStats};
use crate::CliError;

fn tally(report: &mut RunReport, ev: &PerceptionEvent) {
    report.count("frames", 1);
    report.count("triggered", u64::from(ev.triggered));
    report.count("fail_safe", u64::from(ev.error.is_some()));
    report.count("no_stripe", u64::from(ev.no_stripe));
    report.count("heights", ev.heights.iter().filter(|h| h.valid).count() as u64);
}

fn emit(out: &mut dyn Write, ev: &PerceptionEvent) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, ev).map_err(CliError::runtime)?;
    out.write_all(b"\n").map_err(CliError::runtime)
}

fn load_frame(path: &std::path::Path, ts_ms: u64) -> Result<Frame, PipelineError> {
    let mut f = Frame::load(path).map_err(|e| PipelineError::InvalidFrame(format!("{}: {e}", path.display())))?;
    f.timestamp_ms = ts_ms;
    Ok(f)
}

pub(crate) fn run(a: &DetectArgs) -> Result<RunReport, CliError> {
    let cal = load_calib(&a.calib)?;
    let cfg = load_pipeline_config(a.config.as_deref())?;
    let mut det = StripeDetector::new(cal, cfg).map_err(CliError::config)?;
    if let Some(b) = &a.baseline {
        load_baseline(&mut det, b)?;
    }
    let src = FrameSource::open(&a.frames, a.fps)?;
    if src.len() == 0 {
        return Err(CliError::config(format!("{}: no frames", a.frames.display())));
    }
    let digest = ConfigDigest::new("detect")
        .file("calib", Some(&a.calib))
        .and_then(|d| d.file("config", a.config.as_deref()))
        .and_then(|d| d.file("baseline", a.baseline.as_deref()))
        .map_err(CliError::config)?
        .value("fps", a.fps)
        .value("bench", a.bench)
        .value("bench_frames", a.bench_frames)
        .finish();
    let mut report = RunReport::new("detect", digest);
    let mut out = open_output(a.out.as_deref())?;
    let times = if a.bench {
        bench(&det, &src, a, &mut report, &mut *out)?
    } else {
        stream(&det, &src, &mut report, &mut *out)?
    };
    out.flush().map_err(CliError::runtime)?;
    report.timing = TimingStats::from_ms(&times);
    report.extra("mode", if a.bench { "bench" } else { "stream" });
    if let Some(p) = &a.report {
        std::fs::write(p, report.to_json()).map_err(super::io_err(p))?;
    }
    Ok(report)
}

/// One frame in memory at a time; the temporal state holds the rest.
fn stream(
    det: &StripeDetector,
    src: &FrameSource,
    report: &mut RunReport,
    out: &mut dyn Write,
) -> Result<Vec<f64>, CliError> {
    let mut state = det.new_state();
    let mut times = Vec::with_capacity(src.len());
    for (path, &ts) in src.files.iter().zip(&src.ts_ms) {
        let ev = match load_frame(path, ts) {
            Ok(frame) => {
                let t0 = Instant::now();
                let ev = det.process_frame(&frame, &mut state);
                times.push(t0.elapsed().as_secs_f64() * 1e3);
                ev
            }
            Err(e) => {
                log::warn!("{e}");
                PerceptionEvent::fail_safe(ts, &e)
            }
        };
        tally(report, &ev);
        emit(out, &ev)?;
    }
    Ok(times)
}

/// Preloads up to `bench_frames` distinct frames and cycles through them for
/// `bench_frames` iterations, timing only the pipeline on this thread.
fn bench(
    det: &StripeDetector,
    src: &FrameSource,
    a: &DetectArgs,
    report: &mut RunReport,
    out: &mut dyn Write,
) -> Result<Vec<f64>, CliError> {
    let distinct = src.len().min(a.bench_frames.max(1));
    let mut frames = src.files[..distinct]
        .iter()
        .map(|p| load_frame(p, 0).map_err(CliError::config))
        .collect::<Result<Vec<_>, _>>()?;
    let period = 1000.0 / if a.fps > 0.0 { a.fps } else { 50.0 };
    let mut state = det.new_state();
    let mut times = Vec::with_capacity(a.bench_frames);
    for k in 0..a.bench_frames {
        let f = &mut frames[k % distinct];
        f.timestamp_ms = (k as f64 * period).round() as u64;
        let t0 = Instant::now();
        let ev = det.process_frame(f, &mut state);
        times.push(t0.elapsed().as_secs_f64() * 1e3);
        tally(report, &ev);
        emit(out, &ev)?;
    }
    report.count("distinct_frames", distinct as u64);
    Ok(times)
}
