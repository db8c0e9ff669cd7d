use super::render::{GroundTruth, Renderer};
use super::scene::{CameraPose, Obstacle, SceneSpec, ScriptEvent};
use super::SimError;
use crate::exec::Execution;
use crate::geometry::{CameraIntrinsics, RigGeometry};
use crate::seed::derive_seed;
use crate::Frame;

/// Scripted frame sequence. Frame `i` is stamped `round(i · 1000 / fps)` ms
/// and each script event takes effect on the first frame stamped at or after
/// its time. Frames are rendered on demand so long sequences stream.
#[derive(Clone, Debug)]
pub struct Sequence {
    scene: SceneSpec,
    pose: CameraPose,
    intr: CameraIntrinsics,
    rig: RigGeometry,
    fps: f64,
    frames: usize,
    seed: u64,
}

impl Sequence {
    pub fn new(
        scene: SceneSpec,
        pose: CameraPose,
        intr: CameraIntrinsics,
        rig: RigGeometry,
        fps: f64,
        frames: usize,
        seed: u64,
    ) -> Result<Self, SimError> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(SimError::InvalidScene(format!("fps must be positive, got {fps}")));
        }
        scene.validate()?;
        pose.validate()?;
        Ok(Self {
            scene,
            pose,
            intr,
            rig,
            fps,
            frames,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.frames == 0
    }

    pub fn timestamp_ms(&self, index: usize) -> u64 {
        (index as f64 * 1000.0 / self.fps).round() as u64
    }

    /// First frame whose timestamp is at or after `at_ms`.
    pub fn frame_index_at(&self, at_ms: u64) -> usize {
        let mut i = ((at_ms as f64 * self.fps / 1000.0).floor() as usize).saturating_sub(1);
        while self.timestamp_ms(i) < at_ms {
            i += 1;
        }
        i
    }

    /// Frame index of every script event, in script order.
    pub fn event_frames(&self) -> Vec<usize> {
        self.scene.script.iter().map(|e| self.frame_index_at(e.at_ms())).collect()
    }

    /// Obstacle set in effect at frame `index`.
    pub fn obstacles_at(&self, index: usize) -> Vec<Obstacle> {
        let mut active = self.scene.obstacles.clone();
        let mut events: Vec<(usize, usize, &ScriptEvent)> = self
            .scene
            .script
            .iter()
            .enumerate()
            .map(|(k, e)| (self.frame_index_at(e.at_ms()), k, e))
            .filter(|(f, _, _)| *f <= index)
            .collect();
        events.sort_by_key(|&(f, k, _)| (f, k));
        for (_, _, e) in events {
            match e {
                ScriptEvent::Insert { obstacle, .. } => active.push(obstacle.clone()),
                ScriptEvent::Remove { id, .. } => active.retain(|o| o.id.as_deref() != Some(id.as_str())),
            }
        }
        active
    }

    pub fn render_frame(&self, index: usize, exec: Execution) -> Result<(Frame, GroundTruth), SimError> {
        let scene = SceneSpec {
            obstacles: self.obstacles_at(index),
            script: Vec::new(),
            ..self.scene.clone()
        };
        let seed = derive_seed(self.seed, index as u64);
        let (mut frame, mut gt) = Renderer::new(&scene, self.pose, &self.intr, &self.rig)?.render(seed, exec);
        let ts = self.timestamp_ms(index);
        frame.timestamp_ms = ts;
        gt.timestamp_ms = ts;
        Ok((frame, gt))
    }

    pub fn iter(&self, exec: Execution) -> impl Iterator<Item = Result<(Frame, GroundTruth), SimError>> + '_ {
        (0..self.frames).map(move |i| self.render_frame(i, exec))
    }
}

/// Render a whole scripted sequence into memory.
#[allow(clippy::too_many_arguments)]
pub fn render_sequence(
    scene: &SceneSpec,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    rig: &RigGeometry,
    fps: f64,
    frames: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<(Frame, GroundTruth)>, SimError> {
    Sequence::new(scene.clone(), *pose, *intr, *rig, fps, frames, seed)?
        .iter(exec)
        .collect()
}
