use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CameraIntrinsics, GeometryError, Homography, RigGeometry};

/// Metric top-down grid on the floor plane.
///
/// Columns run along the robot edge (`y`), rows outward (`x`). Cell centres
/// sit at `min + (i + 0.5) * cell_mm`. The `y` extent doubles as the
/// calibrated laser coverage: columns outside it are never evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorGrid {
    pub x_min_mm: f64,
    pub x_max_mm: f64,
    pub y_min_mm: f64,
    pub y_max_mm: f64,
    pub cell_mm: f64,
}

impl FloorGrid {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = self.cell_mm > 0.0
            && self.x_max_mm > self.x_min_mm
            && self.y_max_mm > self.y_min_mm
            && [self.x_min_mm, self.x_max_mm, self.y_min_mm, self.y_max_mm, self.cell_mm]
                .iter()
                .all(|v| v.is_finite());
        if !ok {
            return Err(GeometryError::Calibration(format!("invalid floor grid {self:?}")));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        ((self.x_max_mm - self.x_min_mm) / self.cell_mm).round().max(1.0) as usize
    }

    pub fn cols(&self) -> usize {
        ((self.y_max_mm - self.y_min_mm) / self.cell_mm).round().max(1.0) as usize
    }

    #[inline]
    pub fn row_x(&self, row: usize) -> f64 {
        self.x_min_mm + (row as f64 + 0.5) * self.cell_mm
    }

    #[inline]
    pub fn col_y(&self, col: usize) -> f64 {
        self.y_min_mm + (col as f64 + 0.5) * self.cell_mm
    }
}

impl Default for FloorGrid {
    fn default() -> Self {
        Self {
            x_min_mm: 140.0,
            x_max_mm: 360.0,
            y_min_mm: 100.0,
            y_max_mm: 500.0,
            cell_mm: 1.0,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CalibrationFile {
    intrinsics: CameraIntrinsics,
    rig: RigGeometry,
    homography: [[f64; 3]; 3],
    #[serde(default)]
    roi: Option<FloorGrid>,
}

/// Everything the pipeline needs to map pixels to the floor and solve heights.
///
/// `homography` maps image pixels to floor millimetres in the frame described
/// in [`crate::geometry`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibrationFile", into = "CalibrationFile")]
pub struct Calibration {
    pub intrinsics: CameraIntrinsics,
    pub rig: RigGeometry,
    pub homography: Homography,
    pub roi: FloorGrid,
}

impl TryFrom<CalibrationFile> for Calibration {
    type Error = GeometryError;

    fn try_from(f: CalibrationFile) -> Result<Self, Self::Error> {
        let cal = Calibration {
            intrinsics: f.intrinsics,
            rig: f.rig,
            homography: Homography::from_rows(f.homography)?,
            roi: f.roi.unwrap_or_default(),
        };
        cal.validate()?;
        Ok(cal)
    }
}

impl From<Calibration> for CalibrationFile {
    fn from(c: Calibration) -> Self {
        Self {
            intrinsics: c.intrinsics,
            rig: c.rig,
            homography: c.homography.to_rows(),
            roi: Some(c.roi),
        }
    }
}

impl Calibration {
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.intrinsics.validate()?;
        self.rig.validate()?;
        self.roi.validate()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes")
    }

    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeometryError::Calibration(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| GeometryError::Calibration(format!("{}: {e}", path.display())))
    }
}
