use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Pinhole intrinsics with square pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length in pixels.
    pub f_x: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    /// Camera Module 3 class optics (66° horizontal field of view) at 1152×648.
    pub fn half_resolution() -> Self {
        Self {
            f_x: 887.0,
            cx: 576.0,
            cy: 324.0,
            width: 1152,
            height: 648,
        }
    }

    /// Same optics at the sensor's 2304×1296 mode.
    pub fn full_resolution() -> Self {
        Self {
            f_x: 1774.0,
            cx: 1152.0,
            cy: 648.0,
            width: 2304,
            height: 1296,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.f_x.is_finite() && self.f_x > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!("f_x = {}", self.f_x)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidIntrinsics("zero resolution".into()));
        }
        let inside = |v: f64, n: usize| v.is_finite() && v >= 0.0 && v < n as f64;
        if !inside(self.cx, self.width) || !inside(self.cy, self.height) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{}",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self::half_resolution()
    }
}

/// Mounting geometry of the camera/laser pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigGeometry {
    #[serde(rename = "h_cam_mm")]
    pub h_cam: f64,
    #[serde(rename = "h_light_mm")]
    pub h_light: f64,
    /// Horizontal distance from the camera foot to where the laser sheet
    /// meets the floor.
    #[serde(rename = "d_light_mm")]
    pub d_light: f64,
}

impl RigGeometry {
    pub fn new(h_cam: f64, h_light: f64, d_light: f64) -> Result<Self, GeometryError> {
        let rig = Self {
            h_cam,
            h_light,
            d_light,
        };
        rig.validate()?;
        Ok(rig)
    }

    /// Equal camera and laser heights are accepted with a warning: the stripe
    /// then never moves in the image.
    pub fn validate(&self) -> Result<(), GeometryError> {
        for (name, v) in [
            ("h_cam", self.h_cam),
            ("h_light", self.h_light),
            ("d_light", self.d_light),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeometryError::InvalidRig(format!("{name} = {v}")));
            }
        }
        if self.is_insensitive() {
            log::warn!(
                "camera and laser both at {} mm: stripe displacement is zero for every height",
                self.h_cam
            );
        }
        Ok(())
    }

    pub fn is_insensitive(&self) -> bool {
        (self.h_cam - self.h_light).abs() <= 1e-9 * self.h_cam.max(self.h_light)
    }

    /// Upper bound (exclusive) of solvable object heights.
    pub fn height_limit(&self) -> f64 {
        self.h_cam.min(self.h_light)
    }

    /// Angle from the vertical at the camera to the bare-floor stripe.
    pub fn floor_ray_angle(&self) -> f64 {
        (self.d_light / self.h_cam).atan()
    }

    /// Downward tilt below horizontal that aims the optical axis at the floor
    /// stripe.
    pub fn tilt_aimed_at_stripe(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 - self.floor_ray_angle()
    }
}

impl Default for RigGeometry {
    /// Camera at 40 cm, laser at 20 cm, stripe landing 30 cm out.
    fn default() -> Self {
        Self {
            h_cam: 400.0,
            h_light: 200.0,
            d_light: 300.0,
        }
    }
}
