use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scene::{CameraPose, Obstacle, SceneSpec};
use super::SimError;
use crate::exec::Execution;
use crate::geometry::{CameraIntrinsics, RigGeometry};
use crate::lighting::GainField;
use crate::seed::splitmix64;
use crate::Frame;

/// Stencil label of a stripe pixel on the floor; obstacle `k` is `2 + k`.
pub const STENCIL_FLOOR: u8 = 1;

const FWHM_TO_SIGMA: f64 = 1.0 / 2.354_820_045;
const SKY: [f64; 3] = [30.0, 30.0, 30.0];

type V3 = [f64; 3];

#[inline]
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn add_scaled(a: V3, b: V3, s: f64) -> V3 {
    [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s]
}

/// Floor stripe interval blocked by one obstacle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccludedInterval {
    pub obstacle: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub start_mm: f64,
    pub end_mm: f64,
}

/// Where the laser sheet first lands at one along-edge position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnTruth {
    pub y_mm: f64,
    pub hit_x_mm: f64,
    pub surface_height_mm: f64,
    /// Transverse FWHM of the stripe where it lands.
    pub stripe_width_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<usize>,
}

/// Renderer's exact record of one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub timestamp_ms: u64,
    pub seed: u64,
    pub pose: CameraPose,
    pub width: usize,
    pub height: usize,
    /// Per-pixel stripe label: 0 none, [`STENCIL_FLOOR`], or `2 + obstacle`.
    /// Written as a separate grayscale PNG rather than into the JSON sidecar.
    #[serde(skip)]
    pub stencil: Vec<u8>,
    pub occluded: Vec<OccludedInterval>,
    /// Union of the occluded intervals, sorted.
    pub gaps: Vec<[f64; 2]>,
    /// Sampled every millimetre across the laser extent.
    pub columns: Vec<ColumnTruth>,
}

impl GroundTruth {
    pub fn stencil_mask(&self) -> Vec<bool> {
        self.stencil.iter().map(|&l| l != 0).collect()
    }

    pub fn max_gap_mm(&self) -> f64 {
        self.gaps.iter().map(|g| g[1] - g[0]).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }

    pub fn save_stencil_png(&self, path: &Path) -> Result<(), image::ImageError> {
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.stencil.clone())
            .expect("stencil size matches");
        img.save(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Surface {
    Floor,
    Obstacle(usize),
}

#[derive(Clone, Copy, Debug)]
struct Hit {
    t: f64,
    p: V3,
    normal: V3,
    surface: Surface,
}

/// Entry distance and face normal of a ray into an axis-aligned box, for a
/// ray starting outside it.
fn ray_box(o: V3, d: V3, lo: V3, hi: V3, t_max: f64) -> Option<(f64, V3)> {
    let (mut t0, mut t1) = (0.0f64, t_max);
    let mut normal = [0.0; 3];
    for a in 0..3 {
        if d[a].abs() < 1e-15 {
            if o[a] < lo[a] || o[a] > hi[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[a];
        let (mut ta, mut tb) = ((lo[a] - o[a]) * inv, (hi[a] - o[a]) * inv);
        let mut n = [0.0; 3];
        n[a] = -d[a].signum();
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        if ta > t0 {
            t0 = ta;
            normal = n;
        }
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    (t0 > 0.0).then_some((t0, normal))
}

/// Prepared camera and laser for one (scene, pose) pair.
pub struct Renderer<'a> {
    scene: &'a SceneSpec,
    pose: CameraPose,
    intr: CameraIntrinsics,
    rig: RigGeometry,
    centre: V3,
    forward: V3,
    right: V3,
    down: V3,
    laser_dir: V3,
    plane_normal: V3,
    plane_offset: f64,
    lighting: GainField,
}

impl<'a> Renderer<'a> {
    pub fn new(
        scene: &'a SceneSpec,
        pose: CameraPose,
        intr: &CameraIntrinsics,
        rig: &RigGeometry,
    ) -> Result<Self, SimError> {
        scene.validate()?;
        pose.validate()?;
        intr.validate()?;
        rig.validate()?;
        let t = pose.tilt_deg.to_radians();
        let len = rig.d_light.hypot(rig.h_light);
        let r = Self {
            scene,
            pose,
            intr: *intr,
            rig: *rig,
            centre: [pose.x_mm, pose.y_mm, pose.z_mm],
            forward: [t.cos(), 0.0, -t.sin()],
            right: [0.0, -1.0, 0.0],
            down: [-t.sin(), 0.0, -t.cos()],
            laser_dir: [rig.d_light / len, 0.0, -rig.h_light / len],
            plane_normal: [rig.h_light / len, 0.0, rig.d_light / len],
            plane_offset: rig.d_light * rig.h_light / len,
            lighting: GainField::new(scene.lighting, intr.width, intr.height),
        };
        let mid = 0.5 * (scene.laser_extent_mm[0] + scene.laser_extent_mm[1]);
        match r.project([rig.d_light, mid, 0.0]) {
            Some((u, v)) if u >= 0.0 && v >= 0.0 && u < intr.width as f64 && v < intr.height as f64 => Ok(r),
            _ => Err(SimError::EmptyView(format!(
                "floor stripe at ({}, {mid}) mm is outside the image from {pose:?}",
                rig.d_light
            ))),
        }
    }

    /// Pixel coordinates of a world point, `None` behind the camera.
    pub fn project(&self, p: V3) -> Option<(f64, f64)> {
        let q = [p[0] - self.centre[0], p[1] - self.centre[1], p[2] - self.centre[2]];
        let zc = dot(q, self.forward);
        if zc <= 1e-9 {
            return None;
        }
        Some((
            self.intr.cx + self.intr.f_x * dot(q, self.right) / zc,
            self.intr.cy + self.intr.f_x * dot(q, self.down) / zc,
        ))
    }

    fn obstacles(&self) -> &[Obstacle] {
        &self.scene.obstacles
    }

    fn intersect(&self, o: V3, d: V3, with_floor: bool) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        if with_floor && d[2] < 0.0 && o[2] > 0.0 {
            let t = -o[2] / d[2];
            best = Some(Hit {
                t,
                p: add_scaled(o, d, t),
                normal: [0.0, 0.0, 1.0],
                surface: Surface::Floor,
            });
        }
        for (k, ob) in self.obstacles().iter().enumerate() {
            let t_max = best.map_or(f64::INFINITY, |h| h.t);
            if let Some((t, normal)) = ray_box(o, d, ob.min(), ob.max(), t_max) {
                best = Some(Hit {
                    t,
                    p: add_scaled(o, d, t),
                    normal,
                    surface: Surface::Obstacle(k),
                });
            }
        }
        best
    }

    fn stripe_fwhm(&self, p: V3, surface: Surface) -> f64 {
        let r = p[0] * self.laser_dir[0] + (p[2] - self.rig.h_light) * self.laser_dir[2];
        let extra = match surface {
            Surface::Floor => 0.0,
            Surface::Obstacle(k) => self.obstacles()[k].diffusion_mm,
        };
        self.scene.stripe_width_mm + self.scene.blur_growth_mm_per_m * r.max(0.0) / 1000.0 + extra
    }

    /// Unscaled laser profile (0..1) at a surface point, shadows included.
    fn laser_profile(&self, hit: &Hit) -> f64 {
        let [e0, e1] = self.scene.laser_extent_mm;
        if hit.p[1] < e0 || hit.p[1] > e1 || dot(self.laser_dir, hit.normal) >= 0.0 {
            return 0.0;
        }
        let s = dot(self.plane_normal, hit.p) - self.plane_offset;
        let sigma = self.stripe_fwhm(hit.p, hit.surface) * FWHM_TO_SIGMA;
        if s.abs() > 4.0 * sigma {
            return 0.0;
        }
        let origin = add_scaled(hit.p, hit.normal, 1e-6);
        let back = [-self.laser_dir[0], 0.0, -self.laser_dir[2]];
        let reach = (hit.p[0] / self.laser_dir[0]).max(0.0) + 1.0;
        if self
            .obstacles()
            .iter()
            .any(|ob| ray_box(origin, back, ob.min(), ob.max(), reach).is_some())
        {
            return 0.0;
        }
        (-0.5 * (s / sigma).powi(2)).exp()
    }

    fn ambient(&self, hit: &Hit) -> ([f64; 3], f64) {
        match hit.surface {
            Surface::Floor => {
                let c = self.scene.floor_color;
                let tex = if self.scene.texture_noise > 0.0 {
                    let (ix, iy) = (hit.p[0].floor() as i64 as u64, hit.p[1].floor() as i64 as u64);
                    let h = splitmix64(
                        self.scene.texture_seed ^ ix.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ iy.wrapping_mul(0xC2B2_AE3D_27D4_EB4F),
                    );
                    self.scene.texture_noise * ((h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
                } else {
                    0.0
                };
                (
                    [c[0] as f64 + tex, c[1] as f64 + tex, c[2] as f64 + tex],
                    self.scene.floor_reflectivity,
                )
            }
            Surface::Obstacle(k) => {
                let ob = &self.obstacles()[k];
                let shade = match hit.normal {
                    [_, _, z] if z > 0.5 => 1.0,
                    [x, _, _] if x < -0.5 => 0.7,
                    [x, _, _] if x > 0.5 => 0.6,
                    _ => 0.85,
                };
                let c = ob.color;
                (
                    [c[0] as f64 * shade, c[1] as f64 * shade, c[2] as f64 * shade],
                    ob.reflectivity,
                )
            }
        }
    }

    fn render_row(&self, v: usize, seed: u64) -> (Vec<u8>, Vec<u8>) {
        let w = self.intr.width;
        let mut rgb = vec![0u8; w * 3];
        let mut labels = vec![0u8; w];
        let noise = (self.scene.sensor_noise_std > 0.0).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(v as u64);
            (rng, Normal::new(0.0, self.scene.sensor_noise_std).expect("finite std"))
        });
        let mut noise = noise;
        let b = (v as f64 - self.intr.cy) / self.intr.f_x;
        let base = add_scaled(self.forward, self.down, b);
        let peak = 255.0 * self.scene.laser_intensity;
        for u in 0..w {
            let a = (u as f64 - self.intr.cx) / self.intr.f_x;
            let dir = add_scaled(base, self.right, a);
            let (mut px, label) = match self.intersect(self.centre, dir, true) {
                None => (SKY, 0u8),
                Some(hit) => {
                    let (colour, refl) = self.ambient(&hit);
                    let g = self.lighting.gain(u, v) as f64;
                    let off = self.lighting.offset() as f64;
                    let mut px = [colour[0] * g + off, colour[1] * g + off, colour[2] * g + off];
                    let profile = self.laser_profile(&hit);
                    px[0] += peak * refl * profile;
                    let label = if profile >= 0.5 {
                        match hit.surface {
                            Surface::Floor => STENCIL_FLOOR,
                            Surface::Obstacle(k) => (2 + k).min(255) as u8,
                        }
                    } else {
                        0
                    };
                    (px, label)
                }
            };
            if let Some((rng, dist)) = noise.as_mut() {
                for c in &mut px {
                    *c += dist.sample(rng);
                }
            }
            for (c, val) in px.iter().enumerate() {
                rgb[u * 3 + c] = val.round().clamp(0.0, 255.0) as u8;
            }
            labels[u] = label;
        }
        (rgb, labels)
    }

    fn occluded(&self) -> Vec<OccludedInterval> {
        let [e0, e1] = self.scene.laser_extent_mm;
        let rig = &self.rig;
        self.obstacles()
            .iter()
            .enumerate()
            .filter_map(|(k, ob)| {
                let (lo, hi) = (ob.min(), ob.max());
                // The sheet spans x ∈ [d(1 − z/h_light), d] over z ∈ [0, min(h, h_light)].
                let x_near = rig.d_light * (1.0 - ob.height_mm.min(rig.h_light) / rig.h_light);
                let crosses = lo[0] <= rig.d_light && hi[0] >= x_near;
                let (start, end) = (lo[1].max(e0), hi[1].min(e1));
                (crosses && start < end).then(|| OccludedInterval {
                    obstacle: k,
                    id: ob.id.clone(),
                    start_mm: start,
                    end_mm: end,
                })
            })
            .collect()
    }

    fn columns(&self) -> Vec<ColumnTruth> {
        let [e0, e1] = self.scene.laser_extent_mm;
        let n = (e1 - e0).floor() as usize;
        (0..n)
            .filter_map(|i| {
                let y = e0 + i as f64 + 0.5;
                let hit = self.intersect([0.0, y, self.rig.h_light], self.laser_dir, true)?;
                Some(ColumnTruth {
                    y_mm: y,
                    hit_x_mm: hit.p[0],
                    surface_height_mm: hit.p[2].max(0.0),
                    stripe_width_mm: self.stripe_fwhm(hit.p, hit.surface),
                    obstacle: match hit.surface {
                        Surface::Floor => None,
                        Surface::Obstacle(k) => Some(k),
                    },
                })
            })
            .collect()
    }

    pub fn render(&self, seed: u64, exec: Execution) -> (Frame, GroundTruth) {
        let (w, h) = (self.intr.width, self.intr.height);
        let rows = exec.map_range(h, |v| self.render_row(v, seed));
        let mut data = Vec::with_capacity(w * h * 3);
        let mut stencil = Vec::with_capacity(w * h);
        for (rgb, labels) in rows {
            data.extend_from_slice(&rgb);
            stencil.extend_from_slice(&labels);
        }
        let occluded = self.occluded();
        let gaps = merge_intervals(occluded.iter().map(|o| [o.start_mm, o.end_mm]).collect());
        let frame = Frame::new(w, h, data, 0).expect("rendered buffer has frame size");
        let truth = GroundTruth {
            timestamp_ms: 0,
            seed,
            pose: self.pose,
            width: w,
            height: h,
            stencil,
            occluded,
            gaps,
            columns: self.columns(),
        };
        (frame, truth)
    }
}

fn merge_intervals(mut v: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    v.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
            _ => out.push(iv),
        }
    }
    out
}

/// Render one frame with the default execution mode.
pub fn render(
    scene: &SceneSpec,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    rig: &RigGeometry,
    seed: u64,
) -> Result<(Frame, GroundTruth), SimError> {
    render_with(scene, pose, intr, rig, seed, Execution::default())
}

pub fn render_with(
    scene: &SceneSpec,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    rig: &RigGeometry,
    seed: u64,
    exec: Execution,
) -> Result<(Frame, GroundTruth), SimError> {
    Ok(Renderer::new(scene, *pose, intr, rig)?.render(seed, exec))
}
