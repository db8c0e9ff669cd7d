use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nearfield", version, about = "Laser-stripe near-field perception toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scripted scene to frames plus ground truth.
    Simulate(SimulateArgs),
    /// Run the stripe pipeline over a frame directory.
    Detect(DetectArgs),
    /// Estimate object heights against a baseline capture.
    Height(HeightArgs),
    /// Measure stripe displacement over a list of camera poses.
    Sweep(SweepArgs),
    /// Generate a synthetic detector dataset.
    Gen(GenArgs),
    /// Map perception events to robot actions.
    Decide(DecideArgs),
    /// Write a calibration (and optionally a baseline) for a simulated rig.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene description (JSON).
    #[arg(long)]
    pub scene: PathBuf,
    /// Calibration supplying intrinsics and rig geometry; defaults otherwise.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub frames: usize,
    #[arg(long, default_value_t = 50.0)]
    pub fps: f64,
    /// Also write per-frame stencil PNGs.
    #[arg(long)]
    pub stencil: bool,
    /// Render rows on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Directory of PNG/PPM frames, processed in file-name order.
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub calib: PathBuf,
    /// Pipeline configuration (JSON); defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Baseline JSON, or a directory of empty-scene frames, to enable heights.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Events output (JSON lines); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Frame rate used for timestamps when the directory has no manifest.
    #[arg(long, default_value_t = 50.0)]
    pub fps: f64,
    /// Preload frames and time the pipeline instead of streaming.
    #[arg(long)]
    pub bench: bool,
    /// Frames processed in benchmark mode (the directory is cycled).
    #[arg(long, default_value_t = 500)]
    pub bench_frames: usize,
    /// Also write the run report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeightArgs {
    #[arg(long)]
    pub frames: PathBuf,
    /// Baseline JSON, or a directory of empty-scene frames.
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Compare against the simulator's ground-truth sidecars.
    #[arg(long)]
    pub truth: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// JSON array of camera poses.
    #[arg(long)]
    pub poses: PathBuf,
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Dataset configuration (JSON); defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Asset tree with cutouts/ and backgrounds/; the procedural starter set
    /// otherwise.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Image count; the split is rescaled to 70/10/20.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    /// JSON lines of detector events, pipeline events or detector output.
    #[arg(long)]
    pub events: PathBuf,
    /// Action table (JSON); the built-in table otherwise.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value = "conservative")]
    pub policy: String,
    /// Zone for records that do not name one.
    #[arg(long, default_value_t = 'B')]
    pub zone: char,
    /// Millimetres per normalized image unit for detector boxes.
    #[arg(long, default_value_t = 400.0)]
    pub mm_per_unit: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Scene whose camera pose to use; the default pose otherwise.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Existing calibration to take intrinsics and rig from.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Empty-scene frames to build a baseline from.
    #[arg(long)]
    pub baseline_frames: Option<PathBuf>,
    #[arg(long)]
    pub baseline_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}
