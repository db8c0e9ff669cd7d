use serde::{Deserialize, Serialize};

use super::render::{Renderer, STENCIL_FLOOR};
use super::scene::{CameraPose, SceneSpec};
use super::SimError;
use crate::exec::Execution;
use crate::geometry::{displacement_in_camera, CameraIntrinsics, RigGeometry};

/// Stripe displacement on the reference obstacle for one pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pose: CameraPose,
    /// Image column the displacement was measured in.
    pub column: usize,
    pub floor_row: f64,
    pub obstacle_row: f64,
    /// `obstacle_row − floor_row`; positive moves toward the image bottom
    /// (toward the robot edge).
    pub displacement_px: f64,
    /// Closed-form prediction, available when the camera is above the robot
    /// edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_px: Option<f64>,
}

fn column_centroid(stencil: &[u8], width: usize, height: usize, column: usize, label: u8) -> Option<f64> {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in 0..height {
        if stencil[v * width + column] == label {
            n += 1;
            sum += v as f64;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Render the scene with and without its first obstacle from every pose and
/// measure, in the image column through the centre of the stripe on that
/// obstacle, how far the stripe moved. Sensor noise does not affect the
/// result: rows come from the ground-truth stencil.
pub fn placement_sweep(
    scene: &SceneSpec,
    poses: &[CameraPose],
    intr: &CameraIntrinsics,
    rig: &RigGeometry,
    exec: Execution,
) -> Result<Vec<SweepRow>, SimError> {
    if poses.len() < 2 {
        return Err(SimError::Sweep(format!("need at least 2 poses, got {}", poses.len())));
    }
    let reference = scene
        .obstacles
        .first()
        .ok_or_else(|| SimError::Sweep("scene has no reference obstacle".into()))?;
    let empty = SceneSpec {
        obstacles: Vec::new(),
        ..scene.clone()
    };
    let y = reference.y_mm;
    let rows = exec.map(poses, |pose| -> Result<SweepRow, SimError> {
        let with = Renderer::new(scene, *pose, intr, rig)?;
        let without = Renderer::new(&empty, *pose, intr, rig)?;
        let (_, gt) = with.render(0, Execution::Sequential);
        let hit = gt
            .columns
            .iter()
            .min_by(|a, b| (a.y_mm - y).abs().total_cmp(&(b.y_mm - y).abs()))
            .filter(|c| c.obstacle == Some(0))
            .ok_or_else(|| SimError::Sweep("laser does not land on the reference obstacle".into()))?;
        let (u, _) = with
            .project([hit.hit_x_mm, hit.y_mm, hit.surface_height_mm])
            .ok_or_else(|| SimError::Sweep(format!("reference obstacle behind the camera at {pose:?}")))?;
        let column = u.round();
        if column < 0.0 || column >= intr.width as f64 {
            return Err(SimError::Sweep(format!("reference obstacle outside the image at {pose:?}")));
        }
        let column = column as usize;
        let (_, base) = without.render(0, Execution::Sequential);
        let floor_row = column_centroid(&base.stencil, base.width, base.height, column, STENCIL_FLOOR)
            .ok_or_else(|| SimError::Sweep(format!("floor stripe not visible in column {column}")))?;
        let obstacle_row = column_centroid(&gt.stencil, gt.width, gt.height, column, 2)
            .ok_or_else(|| SimError::Sweep(format!("obstacle stripe not visible in column {column}")))?;
        let predicted_px = (pose.x_mm.abs() < 1e-9 && hit.surface_height_mm > 0.0)
            .then(|| {
                let cam_rig = RigGeometry {
                    h_cam: pose.z_mm,
                    ..*rig
                };
                displacement_in_camera(&cam_rig, intr, pose.tilt_deg.to_radians(), hit.surface_height_mm).ok()
            })
            .flatten();
        Ok(SweepRow {
            pose: *pose,
            column,
            floor_row,
            obstacle_row,
            displacement_px: obstacle_row - floor_row,
            predicted_px,
        })
    });
    rows.into_iter().collect()
}
