//! Synthetic camera for the laser-stripe rig.
//!
//! The floor is the plane `z = 0` in the robot frame (x outward from the AMR
//! edge, y along it, z up). The laser is a sheet of parallel rays leaving the
//! line `(0, y, h_light)` toward the floor stripe at `x = d_light`, so every
//! ray travels in direction `(d_light, 0, −h_light)` and an obstacle's shadow
//! on the floor stripe spans exactly its footprint along the edge. Stripe
//! blur is a transverse Gaussian whose FWHM grows linearly with distance from
//! the source line.
//!
//! Renders are pure functions of `(scene, pose, intrinsics, rig, seed)`; the
//! seed only drives sensor noise. The floor texture has its own fixed seed so
//! it does not change between frames.

mod calib;
mod render;
mod scene;
mod sequence;
mod sweep;

pub use calib::synthesize_calibration;
pub use render::{render, render_with, ColumnTruth, GroundTruth, OccludedInterval, Renderer, STENCIL_FLOOR};
pub use scene::{CameraPose, Obstacle, SceneSpec, ScriptEvent};
pub use sequence::{render_sequence, Sequence};
pub use sweep::{placement_sweep, SweepRow};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid camera pose: {0}")]
    InvalidPose(String),
    #[error("camera does not see the laser stripe: {0}")]
    EmptyView(String),
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("placement sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
