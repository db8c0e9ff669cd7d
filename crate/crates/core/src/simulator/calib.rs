use super::render::Renderer;
use super::scene::{CameraPose, SceneSpec};
use super::SimError;
use crate::geometry::{estimate_homography, Calibration, CameraIntrinsics, FloorGrid, Point, RigGeometry};

/// Calibration a technician would obtain by imaging a floor target whose
/// corners coincide with the region of interest.
///
/// The pipeline's height solver assumes the camera sits above the robot edge
/// at `rig.h_cam`; poses elsewhere are accepted with a warning.
pub fn synthesize_calibration(
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    rig: &RigGeometry,
    roi: FloorGrid,
) -> Result<Calibration, SimError> {
    roi.validate()?;
    if pose.x_mm.abs() > 1e-9 || (pose.z_mm - rig.h_cam).abs() > 1e-9 {
        log::warn!(
            "camera at ({}, {}) differs from the rig's ({}, {}): heights will be biased",
            pose.x_mm,
            pose.z_mm,
            0.0,
            rig.h_cam
        );
    }
    let scene = SceneSpec::default();
    let renderer = Renderer::new(&scene, *pose, intr, rig)?;
    let floor = [
        Point::new(roi.x_min_mm, roi.y_min_mm),
        Point::new(roi.x_max_mm, roi.y_min_mm),
        Point::new(roi.x_max_mm, roi.y_max_mm),
        Point::new(roi.x_min_mm, roi.y_max_mm),
    ];
    let mut pixels = [Point::origin(); 4];
    for (px, f) in pixels.iter_mut().zip(&floor) {
        let (u, v) = renderer
            .project([f.x, f.y, 0.0])
            .ok_or_else(|| SimError::EmptyView(format!("target corner ({}, {}) is behind the camera", f.x, f.y)))?;
        *px = Point::new(u, v);
    }
    let calibration = Calibration {
        intrinsics: *intr,
        rig: *rig,
        homography: estimate_homography(&pixels, &floor)?,
        roi,
    };
    calibration.validate()?;
    Ok(calibration)
}
