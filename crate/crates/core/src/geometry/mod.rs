//! Camera model, floor homographies and the light-displacement height solver.
//!
//! All functions here are pure. Lengths are millimetres, angles radians.
//!
//! # Side-view model
//!
//! Heights are solved in the vertical plane that contains the camera, the
//! laser sheet and the object. The floor-frame origin is the floor point
//! directly below the camera; `x` grows outward from the robot edge. The laser
//! sheet passes through height `h_light` above the origin and meets the floor
//! at `x = d_light`. A surface of height `h` intercepts the sheet at
//! `d_obj = d_light * (1 - h / h_light)`, and the camera sees that point at
//! angle `phi_1` from the vertical with `tan(phi_1) = d_obj / (h_cam - h)`.

mod calibration;
mod camera;
mod height;
mod homography;

pub use calibration::{Calibration, FloorGrid};
pub use camera::{CameraIntrinsics, RigGeometry};
pub use height::{
    displacement_in_camera, displacement_sensitivity, forward_parallax, height_from_parallax,
    parallax_angle, HeightEstimate, StripeObservation,
};
pub use homography::{estimate_homography, warp_point, Homography, Point};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid rig geometry: {0}")]
    InvalidRig(String),
    #[error("degenerate geometry: sheet/ray denominator {denominator:e} below guard {guard:e}")]
    DegenerateGeometry { denominator: f64, guard: f64 },
    #[error("object height {h_obj} mm outside [0, {limit}) mm")]
    HeightOutOfRange { h_obj: f64, limit: f64 },
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("point maps to infinity (homogeneous scale {0:e})")]
    PointAtInfinity(f64),
}
