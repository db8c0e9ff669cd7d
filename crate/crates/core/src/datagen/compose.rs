use image::RgbImage;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Annotation, BackgroundAsset, CropRect, CutoutAsset, DatagenError, LightingMode};
use crate::lighting::apply_lighting;

/// Pixel box, `x1`/`y1` exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelBox {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

pub fn box_iou(a: &PixelBox, b: &PixelBox) -> f64 {
    let iw = a.x1.min(b.x1).saturating_sub(a.x0.max(b.x0));
    let ih = a.y1.min(b.y1).saturating_sub(a.y0.max(b.y0));
    let inter = (iw * ih) as f64;
    let union = (a.area() + b.area()) as f64 - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Where and how one cutout lands: rotated by `angle_deg` (counter-clockwise
/// on screen) and scaled about its centre, which is put at (`cx`, `cy`) in
/// continuous output coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub angle_deg: f64,
    pub scale: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Placement {
    /// Half extents of the transformed cutout rectangle.
    fn half_extents(&self, w: u32, h: u32) -> (f64, f64) {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (hw, hh) = (w as f64 / 2.0, h as f64 / 2.0);
        (
            self.scale * (hw * c.abs() + hh * s.abs()),
            self.scale * (hw * s.abs() + hh * c.abs()),
        )
    }
}

// Visits output pixels covered by the transformed cutout with the nearest
// source pixel (inverse mapping from the pixel centre).
fn for_each_covered(
    cutout: &CutoutAsset,
    p: &Placement,
    width: usize,
    height: usize,
    mut f: impl FnMut(usize, usize, &image::Rgba<u8>),
) {
    let (sw, sh) = cutout.image.dimensions();
    let (ex, ey) = p.half_extents(sw, sh);
    let clamp = |v: f64, hi: usize| v.clamp(0.0, hi as f64) as usize;
    let (x0, x1) = (clamp((p.cx - ex).floor() - 1.0, width), clamp((p.cx + ex).ceil() + 1.0, width));
    let (y0, y1) = (clamp((p.cy - ey).floor() - 1.0, height), clamp((p.cy + ey).ceil() + 1.0, height));
    let (s, c) = p.angle_deg.to_radians().sin_cos();
    let inv = 1.0 / p.scale;
    let (hw, hh) = (sw as f64 / 2.0, sh as f64 / 2.0);
    for y in y0..y1 {
        let dy = y as f64 + 0.5 - p.cy;
        for x in x0..x1 {
            let dx = x as f64 + 0.5 - p.cx;
            let u = (c * dx - s * dy) * inv + hw;
            let v = (s * dx + c * dy) * inv + hh;
            if u >= 0.0 && v >= 0.0 && u < sw as f64 && v < sh as f64 {
                f(x, y, cutout.image.get_pixel(u as u32, v as u32));
            }
        }
    }
}

/// Tight bounds of the placed alpha mask, clipped to the canvas.
pub fn placed_bounds(cutout: &CutoutAsset, p: &Placement, width: usize, height: usize) -> Option<PixelBox> {
    let mut b: Option<PixelBox> = None;
    for_each_covered(cutout, p, width, height, |x, y, px| {
        if px.0[3] > 0 {
            let bb = b.get_or_insert(PixelBox {
                x0: x,
                y0: y,
                x1: x + 1,
                y1: y + 1,
            });
            bb.x0 = bb.x0.min(x);
            bb.y0 = bb.y0.min(y);
            bb.x1 = bb.x1.max(x + 1);
            bb.y1 = bb.y1.max(y + 1);
        }
    });
    b
}

/// Alpha-blends the placed cutout onto `canvas`.
pub fn stamp_cutout(canvas: &mut RgbImage, cutout: &CutoutAsset, p: &Placement) {
    let (w, h) = (canvas.width() as usize, canvas.height() as usize);
    for_each_covered(cutout, p, w, h, |x, y, src| {
        let a = src.0[3] as u32;
        if a == 0 {
            return;
        }
        let dst = canvas.get_pixel_mut(x as u32, y as u32);
        for k in 0..3 {
            dst.0[k] = ((src.0[k] as u32 * a + dst.0[k] as u32 * (255 - a) + 127) / 255) as u8;
        }
    });
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComposeParams {
    pub scale_min: f64,
    pub scale_max: f64,
    pub max_iou: f64,
    pub max_retries: usize,
}

impl Default for ComposeParams {
    fn default() -> Self {
        Self {
            scale_min: 0.5,
            scale_max: 1.5,
            max_iou: 0.3,
            max_retries: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Composite {
    pub image: RgbImage,
    pub crop: CropRect,
    /// One entry per cutout that was placed, in placement order.
    pub placed: Vec<(usize, Placement, PixelBox)>,
    pub annotations: Vec<Annotation>,
    /// Cutouts skipped because every attempt overlapped an earlier box too much.
    pub dropped: usize,
}

/// Crops `bg` to `width`×`height`, pastes each cutout at a random pose, and
/// lights the result. Placements are redrawn when the transformed cutout does
/// not fit the image (an error after `max_retries`) or when its box overlaps
/// an earlier one beyond `max_iou` (the cutout is dropped after
/// `max_retries`).
pub fn compose_scene<R: Rng>(
    bg: &BackgroundAsset,
    cutouts: &[&CutoutAsset],
    params: &ComposeParams,
    lighting: LightingMode,
    width: usize,
    height: usize,
    rng: &mut R,
) -> Result<Composite, DatagenError> {
    if !bg.fits(width, height) {
        return Err(DatagenError::Asset {
            id: bg.id.clone(),
            reason: format!("crop {}×{} smaller than {width}×{height}", bg.crop.w, bg.crop.h),
        });
    }
    let crop = CropRect {
        x: bg.crop.x + rng.random_range(0..=bg.crop.w - width as u32),
        y: bg.crop.y + rng.random_range(0..=bg.crop.h - height as u32),
        w: width as u32,
        h: height as u32,
    };
    let mut image = image::imageops::crop_imm(&bg.image, crop.x, crop.y, crop.w, crop.h).to_image();
    let mut placed: Vec<(usize, Placement, PixelBox)> = Vec::new();
    let mut dropped = 0;
    for (k, cutout) in cutouts.iter().enumerate() {
        let (sw, sh) = cutout.image.dimensions();
        let mut fitted = false;
        let mut chosen = None;
        for _ in 0..params.max_retries {
            let angle_deg = rng.random_range(0.0..360.0);
            let scale = if params.scale_max > params.scale_min {
                rng.random_range(params.scale_min..params.scale_max)
            } else {
                params.scale_min
            };
            let probe = Placement {
                angle_deg,
                scale,
                cx: 0.0,
                cy: 0.0,
            };
            let (ex, ey) = probe.half_extents(sw, sh);
            if 2.0 * ex > width as f64 || 2.0 * ey > height as f64 {
                continue;
            }
            fitted = true;
            let p = Placement {
                cx: ex + rng.random::<f64>() * (width as f64 - 2.0 * ex),
                cy: ey + rng.random::<f64>() * (height as f64 - 2.0 * ey),
                ..probe
            };
            let Some(b) = placed_bounds(cutout, &p, width, height) else {
                continue;
            };
            if placed.iter().all(|(_, _, o)| box_iou(o, &b) <= params.max_iou) {
                chosen = Some((p, b));
                break;
            }
        }
        match chosen {
            Some((p, b)) => {
                stamp_cutout(&mut image, cutout, &p);
                placed.push((k, p, b));
            }
            None if !fitted => {
                return Err(DatagenError::Placement {
                    id: cutout.key(),
                    retries: params.max_retries,
                })
            }
            None => dropped += 1,
        }
    }
    apply_lighting(image.as_mut(), width, height, lighting);
    let annotations = placed
        .iter()
        .map(|&(k, _, b)| {
            let class_id = cutouts[k].category.class_id().expect("validated cutout category");
            Annotation::from_box(class_id, b, width, height)
        })
        .collect();
    Ok(Composite {
        image,
        crop,
        placed,
        annotations,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::AssetSet;
    use crate::decision::ObjectCategory;
    use image::Rgba;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block_cutout() -> CutoutAsset {
        // 10×6 with a 4×3 opaque block at (3..7, 2..5).
        let img = image::RgbaImage::from_fn(10, 6, |x, y| {
            if (3..7).contains(&x) && (2..5).contains(&y) {
                Rgba([200, 10, 10, 255])
            } else {
                Rgba([0, 0, 0, 0])
            }
        });
        CutoutAsset::new("block", ObjectCategory::Parts, img, 0, 10.0).unwrap()
    }

    // Independent forward transform: the output pixel is covered when its
    // centre, rotated back and scaled down, lands in an opaque source pixel.
    fn brute_mask(c: &CutoutAsset, p: &Placement, w: usize, h: usize) -> Vec<bool> {
        let t = p.angle_deg.to_radians();
        let (sw, sh) = c.image.dimensions();
        let mut m = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 + 0.5 - p.cx, y as f64 + 0.5 - p.cy);
                // A screen rotation by +t maps source offsets (a, b) to
                // (a cos t + b sin t, −a sin t + b cos t); invert it.
                let a = (dx * t.cos() - dy * t.sin()) / p.scale + sw as f64 / 2.0;
                let b = (dx * t.sin() + dy * t.cos()) / p.scale + sh as f64 / 2.0;
                if a >= 0.0 && b >= 0.0 && (a as u32) < sw && (b as u32) < sh {
                    m[y * w + x] = c.image.get_pixel(a as u32, b as u32).0[3] > 0;
                }
            }
        }
        m
    }

    fn bounds_of(m: &[bool], w: usize) -> Option<PixelBox> {
        let pts: Vec<(usize, usize)> =
            m.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| (i % w, i / w)).collect();
        Some(PixelBox {
            x0: pts.iter().map(|p| p.0).min()?,
            y0: pts.iter().map(|p| p.1).min()?,
            x1: pts.iter().map(|p| p.0).max()? + 1,
            y1: pts.iter().map(|p| p.1).max()? + 1,
        })
    }

    #[test]
    fn identity_placement_shifts_alpha_bounds() {
        let c = block_cutout();
        // Source centre (5, 3) onto output (20, 13): shift (15, 10).
        let p = Placement {
            angle_deg: 0.0,
            scale: 1.0,
            cx: 20.0,
            cy: 13.0,
        };
        let b = placed_bounds(&c, &p, 40, 30).unwrap();
        assert_eq!(b, PixelBox { x0: 18, y0: 12, x1: 22, y1: 15 });
        let p2 = Placement { scale: 2.0, ..p };
        // Every source pixel becomes a 2×2 block around the centre.
        let b2 = placed_bounds(&c, &p2, 40, 30).unwrap();
        assert_eq!(b2, PixelBox { x0: 16, y0: 11, x1: 24, y1: 17 });
    }

    #[test]
    fn bounds_match_independent_transform() {
        let starter = AssetSet::starter();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..40 {
            let c = &starter.cutouts[(k * 7) % starter.cutouts.len()];
            let p = Placement {
                angle_deg: rng.random_range(0.0..360.0),
                scale: rng.random_range(0.5..1.5),
                cx: rng.random_range(-10.0..130.0),
                cy: rng.random_range(-10.0..110.0),
            };
            let m = brute_mask(c, &p, 120, 100);
            assert_eq!(placed_bounds(c, &p, 120, 100), bounds_of(&m, 120), "{p:?}");
            // Tightness: every box edge row/column carries a mask pixel.
            if let Some(b) = bounds_of(&m, 120) {
                let at = |x: usize, y: usize| m[y * 120 + x];
                assert!((b.y0..b.y1).any(|y| at(b.x0, y)));
                assert!((b.y0..b.y1).any(|y| at(b.x1 - 1, y)));
                assert!((b.x0..b.x1).any(|x| at(x, b.y0)));
                assert!((b.x0..b.x1).any(|x| at(x, b.y1 - 1)));
            }
        }
    }

    #[test]
    fn opaque_pixels_replace_background() {
        let c = block_cutout();
        let mut canvas = RgbImage::from_pixel(40, 30, image::Rgb([50, 50, 50]));
        let p = Placement {
            angle_deg: 0.0,
            scale: 1.0,
            cx: 20.0,
            cy: 13.0,
        };
        stamp_cutout(&mut canvas, &c, &p);
        assert_eq!(canvas.get_pixel(18, 12).0, [200, 10, 10]);
        assert_eq!(canvas.get_pixel(17, 12).0, [50, 50, 50]);
    }

    #[test]
    fn zero_objects_is_lit_background() {
        let set = AssetSet::starter();
        let bg = &set.backgrounds[0];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = compose_scene(bg, &[], &ComposeParams::default(), LightingMode::Reduced, 320, 320, &mut rng)
            .unwrap();
        assert!(out.annotations.is_empty());
        let mut expect = image::imageops::crop_imm(&bg.image, out.crop.x, out.crop.y, 320, 320).to_image();
        apply_lighting(expect.as_mut(), 320, 320, LightingMode::Reduced);
        assert_eq!(out.image, expect);
    }

    #[test]
    fn composition_is_deterministic_and_respects_iou_cap() {
        let set = AssetSet::starter();
        let picks: Vec<&CutoutAsset> = set.cutouts.iter().step_by(11).collect();
        let params = ComposeParams::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            compose_scene(&set.backgrounds[1], &picks, &params, LightingMode::Dir45, 320, 320, &mut rng).unwrap()
        };
        let (a, b) = (run(9), run(9));
        assert_eq!(a.image, b.image);
        assert_eq!(a.annotations, b.annotations);
        assert_eq!(a.placed.len() + a.dropped, picks.len());
        for (i, x) in a.placed.iter().enumerate() {
            for y in &a.placed[i + 1..] {
                assert!(box_iou(&x.2, &y.2) <= params.max_iou);
            }
        }
        for ann in &a.annotations {
            assert_eq!(ann.violation(), None);
        }
    }

    #[test]
    fn oversized_cutout_errors() {
        let set = AssetSet::starter();
        let params = ComposeParams {
            scale_min: 20.0,
            scale_max: 30.0,
            ..ComposeParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = compose_scene(
            &set.backgrounds[0],
            &[&set.cutouts[0]],
            &params,
            LightingMode::Regular,
            320,
            320,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, DatagenError::Placement { .. }));
    }

    #[test]
    fn iou_basics() {
        let a = PixelBox { x0: 0, y0: 0, x1: 10, y1: 10 };
        let b = PixelBox { x0: 5, y0: 0, x1: 15, y1: 10 };
        assert!((box_iou(&a, &b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(box_iou(&a, &PixelBox { x0: 20, y0: 20, x1: 21, y1: 21 }), 0.0);
    }
}
