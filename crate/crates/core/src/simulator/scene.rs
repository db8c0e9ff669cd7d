use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::RigGeometry;
use crate::lighting::LightingMode;

/// Axis-aligned box standing on the floor. `x_mm`/`y_mm` locate the footprint
/// centre; `width_mm` runs along the AMR edge (the stripe direction) and
/// `depth_mm` outward from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub x_mm: f64,
    pub y_mm: f64,
    pub width_mm: f64,
    pub depth_mm: f64,
    pub height_mm: f64,
    #[serde(default = "one")]
    pub reflectivity: f64,
    #[serde(default = "obstacle_color")]
    pub color: [u8; 3],
    /// Extra stripe width on this obstacle's surfaces, emulating diffuse or
    /// shiny materials.
    #[serde(default)]
    pub diffusion_mm: f64,
}

fn one() -> f64 {
    1.0
}

fn obstacle_color() -> [u8; 3] {
    [90, 90, 90]
}

impl Obstacle {
    pub fn new(x_mm: f64, y_mm: f64, width_mm: f64, depth_mm: f64, height_mm: f64) -> Self {
        Self {
            id: None,
            x_mm,
            y_mm,
            width_mm,
            depth_mm,
            height_mm,
            reflectivity: 1.0,
            color: obstacle_color(),
            diffusion_mm: 0.0,
        }
    }

    /// Box of the given footprint width and height placed so that the laser
    /// sheet lands on its top face while a camera at `rig.h_cam` above the
    /// robot edge still sees the floor stripe past it.
    pub fn on_stripe(rig: &RigGeometry, y_mm: f64, width_mm: f64, height_mm: f64) -> Self {
        let d_obj = rig.d_light * (1.0 - height_mm / rig.h_light);
        let x_hidden = rig.d_light * (1.0 - height_mm / rig.h_cam);
        let near = d_obj - 10.0;
        let far = 0.5 * (d_obj + x_hidden);
        Self::new(0.5 * (near + far), y_mm, width_mm, far - near, height_mm)
    }

    pub fn min(&self) -> [f64; 3] {
        [self.x_mm - 0.5 * self.depth_mm, self.y_mm - 0.5 * self.width_mm, 0.0]
    }

    pub fn max(&self) -> [f64; 3] {
        [self.x_mm + 0.5 * self.depth_mm, self.y_mm + 0.5 * self.width_mm, self.height_mm]
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let name = self.id.as_deref().unwrap_or("obstacle");
        let finite = [self.x_mm, self.y_mm, self.width_mm, self.depth_mm, self.height_mm, self.diffusion_mm]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.width_mm <= 0.0 || self.depth_mm <= 0.0 || self.height_mm <= 0.0 {
            return Err(SimError::InvalidScene(format!("{name}: extents must be positive")));
        }
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return Err(SimError::InvalidScene(format!("{name}: reflectivity outside [0, 1]")));
        }
        if self.diffusion_mm < 0.0 {
            return Err(SimError::InvalidScene(format!("{name}: diffusion_mm must be non-negative")));
        }
        if self.min()[0] < 0.0 {
            return Err(SimError::InvalidScene(format!("{name}: footprint reaches inside the robot (x < 0)")));
        }
        Ok(())
    }
}

/// Camera position relative to the AMR edge (mm) and downward tilt below the
/// horizontal (degrees). The camera looks outward along +x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub x_mm: f64,
    pub y_mm: f64,
    pub z_mm: f64,
    pub tilt_deg: f64,
}

impl CameraPose {
    /// Camera above the robot edge at `rig.h_cam`, centred on the default
    /// region of interest and aimed at floor x = 260 mm.
    pub fn default_for(rig: &RigGeometry) -> Self {
        Self::aimed_at(0.0, 300.0, rig.h_cam, 260.0)
    }

    /// Pose at `(x, y, z)` tilted to look at floor distance `target_x_mm`.
    pub fn aimed_at(x_mm: f64, y_mm: f64, z_mm: f64, target_x_mm: f64) -> Self {
        Self {
            x_mm,
            y_mm,
            z_mm,
            tilt_deg: z_mm.atan2(target_x_mm - x_mm).to_degrees(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.x_mm.is_finite() && self.y_mm.is_finite() && self.z_mm.is_finite() && self.z_mm > 0.0) {
            return Err(SimError::InvalidPose(format!("camera position {self:?}")));
        }
        if !(0.0..90.0).contains(&self.tilt_deg) {
            return Err(SimError::InvalidPose(format!("tilt {}° outside [0°, 90°)", self.tilt_deg)));
        }
        Ok(())
    }
}

/// Timed change to the obstacle set of a sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ScriptEvent {
    Insert { at_ms: u64, obstacle: Obstacle },
    Remove { at_ms: u64, id: String },
}

impl ScriptEvent {
    pub fn at_ms(&self) -> u64 {
        match self {
            ScriptEvent::Insert { at_ms, .. } | ScriptEvent::Remove { at_ms, .. } => *at_ms,
        }
    }
}

/// Declarative scene. All lengths in mm, colours and noise in 8-bit counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub floor_color: [u8; 3],
    /// Amplitude of the fixed per-millimetre floor texture.
    pub texture_noise: f64,
    pub texture_seed: u64,
    pub floor_reflectivity: f64,
    pub obstacles: Vec<Obstacle>,
    pub lighting: LightingMode,
    pub sensor_noise_std: f64,
    /// Transverse FWHM of the stripe at the laser source.
    pub stripe_width_mm: f64,
    /// FWHM growth per metre of distance from the source.
    pub blur_growth_mm_per_m: f64,
    /// Peak stripe brightness as a fraction of full scale.
    pub laser_intensity: f64,
    /// Along-edge extent `[start, end]` covered by the laser sheet.
    pub laser_extent_mm: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraPose>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<ScriptEvent>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            floor_color: [120, 120, 120],
            texture_noise: 0.0,
            texture_seed: 0,
            floor_reflectivity: 1.0,
            obstacles: Vec::new(),
            lighting: LightingMode::Regular,
            sensor_noise_std: 0.0,
            stripe_width_mm: 2.0,
            blur_growth_mm_per_m: 2.0,
            laser_intensity: 1.0,
            laser_extent_mm: [80.0, 520.0],
            camera: None,
            script: Vec::new(),
        }
    }
}

impl SceneSpec {
    pub fn with_obstacles(obstacles: Vec<Obstacle>) -> Self {
        Self {
            obstacles,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScene(m.into()));
        if !(self.sensor_noise_std.is_finite() && self.sensor_noise_std >= 0.0) {
            return bad("sensor_noise_std must be ≥ 0");
        }
        if !(self.texture_noise.is_finite() && self.texture_noise >= 0.0) {
            return bad("texture_noise must be ≥ 0");
        }
        if !(self.stripe_width_mm > 0.0 && self.blur_growth_mm_per_m >= 0.0) {
            return bad("stripe width must be > 0 and blur growth ≥ 0");
        }
        if !(0.0..=1.0).contains(&self.floor_reflectivity) || !(0.0..=1.0).contains(&self.laser_intensity) {
            return bad("floor_reflectivity and laser_intensity must lie in [0, 1]");
        }
        if self.laser_extent_mm[0].partial_cmp(&self.laser_extent_mm[1]) != Some(std::cmp::Ordering::Less) {
            return bad("laser_extent_mm must be increasing");
        }
        for o in &self.obstacles {
            o.validate()?;
        }
        for e in &self.script {
            if let ScriptEvent::Insert { obstacle, .. } = e {
                obstacle.validate()?;
            }
        }
        if let Some(c) = &self.camera {
            c.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let scene = Self::from_json(&text).map_err(|e| SimError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scene.validate()?;
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_uses_defaults() {
        let s = SceneSpec::from_json(
            r#"{"obstacles":[{"x_mm":250,"y_mm":300,"width_mm":80,"depth_mm":30,"height_mm":60}]}"#,
        )
        .unwrap();
        assert_eq!(s.obstacles[0].reflectivity, 1.0);
        assert_eq!(s.lighting, LightingMode::Regular);
        s.validate().unwrap();
        let back = SceneSpec::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn script_events_parse() {
        let s = SceneSpec::from_json(
            r#"{"script":[
                {"action":"insert","at_ms":100,"obstacle":{"id":"a","x_mm":250,"y_mm":300,"width_mm":80,"depth_mm":30,"height_mm":60}},
                {"action":"remove","at_ms":300,"id":"a"}]}"#,
        )
        .unwrap();
        assert_eq!(s.script.len(), 2);
        assert_eq!(s.script[1].at_ms(), 300);
    }

    #[test]
    fn invalid_obstacles_rejected() {
        let mut o = Obstacle::new(250.0, 300.0, 80.0, 30.0, 60.0);
        o.reflectivity = 1.5;
        assert!(o.validate().is_err());
        let o = Obstacle::new(250.0, 300.0, 0.0, 30.0, 60.0);
        assert!(o.validate().is_err());
        let o = Obstacle::new(5.0, 300.0, 80.0, 30.0, 60.0);
        assert!(o.validate().is_err());
    }

    #[test]
    fn on_stripe_placement_keeps_laser_on_top() {
        let rig = RigGeometry::default();
        for h in [20.0, 60.0, 120.0] {
            let o = on_stripe(&rig, h);
            let d_obj = rig.d_light * (1.0 - h / rig.h_light);
            assert!(o.min()[0] < d_obj && d_obj < o.max()[0]);
            assert!(o.max()[0] < rig.d_light * (1.0 - h / rig.h_cam));
        }
    }

    fn on_stripe(rig: &RigGeometry, h: f64) -> Obstacle {
        Obstacle::on_stripe(rig, 300.0, 80.0, h)
    }

    #[test]
    fn pose_validation() {
        assert!(CameraPose::default_for(&RigGeometry::default()).validate().is_ok());
        let mut p = CameraPose::default_for(&RigGeometry::default());
        p.tilt_deg = 90.0;
        assert!(p.validate().is_err());
        p.tilt_deg = 45.0;
        p.z_mm = 0.0;
        assert!(p.validate().is_err());
    }
}
