pub(crate) mod calibrate;
pub(crate) mod decide;
pub(crate) mod detect;
pub(crate) mod gen;
pub(crate) mod height;
pub(crate) mod simulate;
pub(crate) mod sweep;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nearfield::frame::list_frame_files;
use nearfield::geometry::{Calibration, CameraIntrinsics, FloorGrid, RigGeometry};
use nearfield::simulator::{SceneSpec, SimError};
use nearfield::stripe::{Baseline, PipelineConfig, StripeDetector};
use nearfield::Frame;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// `serde_json` error with the file and position.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

pub(crate) fn load_calib(path: &Path) -> Result<Calibration, CliError> {
    Calibration::load(path).map_err(CliError::config)
}

pub(crate) fn load_pipeline_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let cfg: PipelineConfig = match path {
        Some(p) => parse_json(p)?,
        None => PipelineConfig::default(),
    };
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

/// Intrinsics, rig and floor grid from a calibration file, or the defaults.
pub(crate) fn rig_setup(calib: Option<&Path>) -> Result<(CameraIntrinsics, RigGeometry, FloorGrid), CliError> {
    match calib {
        Some(p) => {
            let c = load_calib(p)?;
            Ok((c.intrinsics, c.rig, c.roi))
        }
        None => Ok((CameraIntrinsics::half_resolution(), RigGeometry::default(), FloorGrid::default())),
    }
}

pub(crate) fn load_scene(path: &Path) -> Result<SceneSpec, CliError> {
    SceneSpec::load(path).map_err(CliError::config)
}

pub(crate) fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Io(_) => CliError::runtime(e),
        _ => CliError::config(e),
    }
}

pub(crate) fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
            }
            let f = fs::File::create(p).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::runtime(format!("{}: {e}", path.display()))
}

/// Baseline from a saved JSON file or from a directory of empty-scene frames.
pub(crate) fn load_baseline(det: &mut StripeDetector, path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        let files = list_frame_files(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if files.is_empty() {
            return Err(CliError::config(format!("{}: no baseline frames", path.display())));
        }
        let frames = files
            .iter()
            .map(|f| Frame::load(f).map_err(|e| CliError::config(format!("{}: {e}", f.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        det.calibrate_baseline(&frames).map_err(CliError::config)?;
    } else {
        let b: Baseline = parse_json(path)?;
        det.set_baseline(Some(b));
    }
    Ok(())
}

/// One entry of the `manifest.json` that `simulate` writes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct SimFrame {
    pub file: String,
    pub truth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stencil: Option<String>,
    pub ts_ms: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct SimManifest {
    pub seed: u64,
    pub fps: f64,
    pub calib: String,
    pub frames: Vec<SimFrame>,
}

/// Frames of a directory in order, with timestamps from the simulator
/// manifest when present and `i · 1000 / fps` otherwise.
pub(crate) struct FrameSource {
    pub files: Vec<PathBuf>,
    pub ts_ms: Vec<u64>,
}

impl FrameSource {
    pub fn open(dir: &Path, fps: f64) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::config(format!("{}: not a frame directory", dir.display())));
        }
        let manifest = dir.join("manifest.json");
        if manifest.is_file() {
            if let Ok(m) = parse_json::<SimManifest>(&manifest) {
                return Ok(Self {
                    files: m.frames.iter().map(|f| dir.join(&f.file)).collect(),
                    ts_ms: m.frames.iter().map(|f| f.ts_ms).collect(),
                });
            }
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(CliError::config(format!("fps must be positive, got {fps}")));
        }
        let files = list_frame_files(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
        let ts_ms = (0..files.len()).map(|i| (i as f64 * 1000.0 / fps).round() as u64).collect();
        Ok(Self { files, ts_ms })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }
}
