use serde::{Deserialize, Serialize};

use super::{CameraIntrinsics, GeometryError, RigGeometry};

/// Stripe positions along the image axis that lies in the camera–laser
/// vertical plane, in pixels from the principal point.
///
/// `x_corner` is the reference ray the parallax is measured from: the
/// direction straight down from the camera onto the robot edge. `x_obj` is the
/// stripe on the object. With the axis pointing toward the robot edge,
/// `x_corner >= x_obj` for every visible floor or object point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripeObservation {
    pub x_corner: f64,
    pub x_obj: f64,
}

impl StripeObservation {
    pub fn new(x_corner: f64, x_obj: f64) -> Self {
        Self { x_corner, x_obj }
    }

    /// Observation of a stripe point seen through a virtual camera looking
    /// straight down from the real camera centre. `apparent_x_mm` is where
    /// the camera ray through the stripe meets the floor plane, which is what
    /// a floor-rectified grid reports.
    pub fn from_rectified(apparent_x_mm: f64, rig: &RigGeometry, intr: &CameraIntrinsics) -> Self {
        Self {
            x_corner: 0.0,
            x_obj: -intr.f_x * apparent_x_mm / rig.h_cam,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightEstimate {
    pub h_obj: f64,
    pub d_obj: f64,
    pub phi_1: f64,
    /// False when `h_obj` falls outside `[0, min(h_cam, h_light))`. The value
    /// is reported unclamped.
    pub valid: bool,
}

/// Angle between the reference ray and the object ray.
pub fn parallax_angle(obs: StripeObservation, intr: &CameraIntrinsics) -> Result<f64, GeometryError> {
    if !(obs.x_corner.is_finite() && obs.x_obj.is_finite()) {
        return Err(GeometryError::InvalidObservation(format!(
            "non-finite stripe coordinates ({}, {})",
            obs.x_corner, obs.x_obj
        )));
    }
    if !(intr.f_x.is_finite() && intr.f_x > 0.0) {
        return Err(GeometryError::InvalidIntrinsics(format!("f_x = {}", intr.f_x)));
    }
    Ok((obs.x_corner / intr.f_x).atan() - (obs.x_obj / intr.f_x).atan())
}

/// Closed-form object height from the parallax angle.
pub fn height_from_parallax(phi_1: f64, rig: &RigGeometry) -> Result<HeightEstimate, GeometryError> {
    if !phi_1.is_finite() {
        return Err(GeometryError::InvalidObservation(format!("phi_1 = {phi_1}")));
    }
    let t = phi_1.tan();
    let denominator = rig.d_light - rig.h_light * t;
    let guard = 1e-6 * rig.d_light;
    if denominator.abs() < guard {
        return Err(GeometryError::DegenerateGeometry { denominator, guard });
    }
    let h_obj = rig.h_light * (rig.d_light - rig.h_cam * t) / denominator;
    let d_obj = rig.d_light * (1.0 - h_obj / rig.h_light);
    let valid = h_obj >= 0.0 && h_obj < rig.height_limit();
    Ok(HeightEstimate {
        h_obj,
        d_obj,
        phi_1,
        valid,
    })
}

/// Parallax angle at which a surface of height `h_obj` is seen.
pub fn forward_parallax(h_obj: f64, rig: &RigGeometry) -> Result<f64, GeometryError> {
    let limit = rig.height_limit();
    if !(h_obj.is_finite() && (0.0..limit).contains(&h_obj)) {
        return Err(GeometryError::HeightOutOfRange { h_obj, limit });
    }
    let t = rig.d_light * (rig.h_light - h_obj) / (rig.h_light * (rig.h_cam - h_obj));
    Ok(t.atan())
}

/// Signed image shift (pixels) of the stripe between the bare floor and a
/// surface of height `h_obj`, for a camera tilted `tilt` radians below the
/// horizontal. Positive values move toward the robot edge.
pub fn displacement_in_camera(
    rig: &RigGeometry,
    intr: &CameraIntrinsics,
    tilt: f64,
    h_obj: f64,
) -> Result<f64, GeometryError> {
    let phi_1 = forward_parallax(h_obj, rig)?;
    let axis = std::f64::consts::FRAC_PI_2 - tilt;
    let row = |ray_from_vertical: f64| intr.f_x * (axis - ray_from_vertical).tan();
    Ok(row(phi_1) - row(rig.floor_ray_angle()))
}

/// Magnitude of the stripe shift for a camera aimed at the floor stripe.
///
/// Used to rank mounting positions; logs a warning when the rig has no
/// vertical camera/laser offset.
pub fn displacement_sensitivity(
    rig: &RigGeometry,
    intr: &CameraIntrinsics,
    h_obj: f64,
) -> Result<f64, GeometryError> {
    if rig.is_insensitive() {
        log::warn!("zero-sensitivity rig: camera and laser at the same height");
    }
    Ok(displacement_in_camera(rig, intr, rig.tilt_aimed_at_stripe(), h_obj)?.abs())
}
