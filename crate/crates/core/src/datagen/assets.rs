use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage, Rgba, RgbaImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatagenError, DatasetConfig};
use crate::decision::ObjectCategory;

/// Capture angles of the asset corpus, in degrees.
pub const CAPTURE_ANGLES: [u16; 8] = [0, 45, 90, 135, 180, 225, 270, 315];

#[derive(Clone, Debug, PartialEq)]
pub struct CutoutAsset {
    pub id: String,
    pub category: ObjectCategory,
    pub image: RgbaImage,
    pub angle_deg: u16,
    pub size_hint_mm: f64,
}

impl CutoutAsset {
    pub fn new(
        id: impl Into<String>,
        category: ObjectCategory,
        image: RgbaImage,
        angle_deg: u16,
        size_hint_mm: f64,
    ) -> Result<Self, DatagenError> {
        let c = Self {
            id: id.into(),
            category,
            image,
            angle_deg,
            size_hint_mm,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |reason: String| {
            Err(DatagenError::Asset {
                id: self.id.clone(),
                reason,
            })
        };
        if !CAPTURE_ANGLES.contains(&self.angle_deg) {
            return bad(format!("capture angle {} is not a multiple of 45 in 0..=315", self.angle_deg));
        }
        if self.category.class_id().is_none() {
            return bad(format!("category {} is not detectable", self.category));
        }
        let alpha = || self.image.pixels().map(|p| p.0[3]);
        if !alpha().any(|a| a == 0) || !alpha().any(|a| a > 0) {
            return bad("alpha mask must have transparent and opaque pixels".into());
        }
        Ok(())
    }

    /// Source key for the manifest: `<category>/<id>_<angle>`.
    pub fn key(&self) -> String {
        format!("{}/{}_{}", self.category, self.id, self.angle_deg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CropRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundAsset {
    pub id: String,
    pub image: RgbImage,
    /// Usable region of the source image.
    pub crop: CropRect,
}

impl BackgroundAsset {
    pub fn new(id: impl Into<String>, image: RgbImage) -> Self {
        let crop = CropRect {
            x: 0,
            y: 0,
            w: image.width(),
            h: image.height(),
        };
        Self {
            id: id.into(),
            image,
            crop,
        }
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.crop.w as usize >= width
            && self.crop.h as usize >= height
            && self.crop.x + self.crop.w <= self.image.width()
            && self.crop.y + self.crop.h <= self.image.height()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssetSet {
    pub cutouts: Vec<CutoutAsset>,
    pub backgrounds: Vec<BackgroundAsset>,
}

fn size_hint(cat: ObjectCategory) -> f64 {
    match cat {
        ObjectCategory::Human => 250.0,
        ObjectCategory::Tools => 200.0,
        ObjectCategory::Materials => 300.0,
        ObjectCategory::Parts => 80.0,
        ObjectCategory::Vehicles => 600.0,
        ObjectCategory::Environment => 350.0,
        ObjectCategory::SafetyPpe => 150.0,
        ObjectCategory::Unknown => 100.0,
    }
}

// Shape membership in [-1, 1]² plus a fill colour.
fn starter_shape(cat: ObjectCategory, u: f64, v: f64) -> Option<[u8; 3]> {
    let disc = |cu: f64, cv: f64, r: f64| (u - cu).powi(2) + (v - cv).powi(2) <= r * r;
    let rect = |u0: f64, v0: f64, u1: f64, v1: f64| u >= u0 && u <= u1 && v >= v0 && v <= v1;
    match cat {
        ObjectCategory::Human => {
            let sole = (u / 0.42).powi(2) + ((v - 0.1) / 0.8).powi(2) <= 1.0;
            (sole || disc(0.0, -0.62, 0.34)).then_some([205, 160, 130])
        }
        ObjectCategory::Tools => {
            let ring = disc(0.62, 0.0, 0.34) && !disc(0.72, 0.0, 0.14);
            (rect(-0.9, -0.13, 0.5, 0.13) || ring).then_some([165, 168, 178])
        }
        ObjectCategory::Materials => {
            if rect(-0.8, -0.55, 0.8, 0.55) {
                Some(if v.abs() < 0.08 { [210, 190, 140] } else { [160, 118, 70] })
            } else {
                None
            }
        }
        ObjectCategory::Parts => {
            (rect(-0.7, -0.7, -0.35, 0.7) || rect(-0.7, 0.35, 0.7, 0.7)).then_some([122, 126, 136])
        }
        ObjectCategory::Vehicles => {
            let body = rect(-0.85, -0.45, 0.85, 0.35);
            let wheel = [(-0.55, 0.45), (0.55, 0.45)].iter().any(|&(cu, cv)| disc(cu, cv, 0.2));
            if wheel {
                Some([30, 30, 30])
            } else {
                body.then_some([40, 92, 170])
            }
        }
        ObjectCategory::Environment => {
            let inside = (-0.85..=0.85).contains(&v) && u.abs() <= 0.5 * (v + 0.85) / 1.7 + 0.05;
            if !inside {
                None
            } else if (v - 0.1).abs() < 0.12 {
                Some([235, 235, 235])
            } else {
                Some([240, 118, 30])
            }
        }
        ObjectCategory::SafetyPpe => {
            let lens = disc(-0.45, 0.0, 0.32) || disc(0.45, 0.0, 0.32);
            (lens || rect(-0.2, -0.06, 0.2, 0.06)).then_some([232, 208, 40])
        }
        ObjectCategory::Unknown => None,
    }
}

fn starter_cutout(cat: ObjectCategory, angle_deg: u16) -> RgbaImage {
    let size = match cat {
        ObjectCategory::Parts => 40,
        ObjectCategory::Vehicles => 88,
        ObjectCategory::Materials | ObjectCategory::Environment => 72,
        _ => 60,
    };
    // Viewing the object from another side: turn the shape and foreshorten.
    let a = (angle_deg as f64).to_radians();
    let squash = 0.7 + 0.3 * a.cos().abs();
    let (c, s) = (a.cos(), a.sin());
    RgbaImage::from_fn(size, size, |x, y| {
        let half = size as f64 / 2.0;
        let (px, py) = ((x as f64 + 0.5 - half) / half, (y as f64 + 0.5 - half) / half);
        let (u, v) = ((c * px + s * py) / squash, -s * px + c * py);
        match starter_shape(cat, u * 1.1, v * 1.1) {
            Some([r, g, b]) => {
                let shade = 1.0 - 0.15 * (py + 1.0) / 2.0;
                let f = |c: u8| (c as f64 * shade).round() as u8;
                Rgba([f(r), f(g), f(b), 255])
            }
            None => Rgba([0, 0, 0, 0]),
        }
    })
}

fn starter_background(index: u64, width: u32, height: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF100_0000 + index);
    let base: f64 = rng.random_range(95.0..150.0);
    let tint: [f64; 3] = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
    // Low-frequency blotches on an 8×8 grid, bilinear.
    const G: usize = 8;
    let coarse: Vec<f64> = (0..(G + 1) * (G + 1)).map(|_| rng.random_range(-18.0..18.0)).collect();
    let line_y = rng.random_range(0..height);
    let has_line = rng.random_bool(0.5);
    let mut img = RgbImage::new(width, height);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let gx = x as f64 / width as f64 * G as f64;
        let gy = y as f64 / height as f64 * G as f64;
        let (ix, iy) = (gx as usize, gy as usize);
        let (fx, fy) = (gx - ix as f64, gy - iy as f64);
        let at = |i: usize, j: usize| coarse[j.min(G) * (G + 1) + i.min(G)];
        let blotch = at(ix, iy) * (1.0 - fx) * (1.0 - fy)
            + at(ix + 1, iy) * fx * (1.0 - fy)
            + at(ix, iy + 1) * (1.0 - fx) * fy
            + at(ix + 1, iy + 1) * fx * fy;
        let grain: f64 = rng.random_range(-6.0..6.0);
        let on_line = has_line && (y as i64 - line_y as i64).abs() < 6;
        let rgb = if on_line {
            [215.0, 185.0, 40.0]
        } else {
            let l = base + blotch + grain;
            [l + tint[0], l + tint[1], l + tint[2]]
        };
        *px = Rgb(rgb.map(|c| c.round().clamp(0.0, 255.0) as u8));
    }
    img
}

const CUTOUT_DIR: &str = "cutouts";
const BACKGROUND_DIR: &str = "backgrounds";

impl AssetSet {
    /// Procedural stand-ins: one object per detectable category at all eight
    /// capture angles, and four floor textures at 480×400.
    pub fn starter() -> Self {
        let mut cutouts = Vec::new();
        for cat in ObjectCategory::DETECTABLE {
            for angle in CAPTURE_ANGLES {
                let id = format!("{}0", cat.name());
                cutouts.push(
                    CutoutAsset::new(id, cat, starter_cutout(cat, angle), angle, size_hint(cat))
                        .expect("starter cutouts are valid"),
                );
            }
        }
        let backgrounds = (0..4)
            .map(|i| BackgroundAsset::new(format!("floor{i}"), starter_background(i, 480, 400)))
            .collect();
        Self { cutouts, backgrounds }
    }

    pub fn by_category(&self, cat: ObjectCategory) -> Vec<&CutoutAsset> {
        self.cutouts.iter().filter(|c| c.category == cat).collect()
    }

    /// Everything a config needs that the set lacks, as one error.
    pub fn check(&self, config: &DatasetConfig) -> Result<(), DatagenError> {
        let mut missing = Vec::new();
        if self.backgrounds.is_empty() {
            missing.push("no background images".to_string());
        }
        for b in &self.backgrounds {
            if !b.fits(config.width, config.height) {
                missing.push(format!(
                    "background {} crop {}×{} is smaller than the {}×{} output",
                    b.id, b.crop.w, b.crop.h, config.width, config.height
                ));
            }
        }
        for &cat in &config.categories {
            if self.by_category(cat).is_empty() {
                missing.push(format!("no cutouts for category {cat}"));
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(DatagenError::MissingAssets(missing))
        }
    }

    /// Counts of cutouts per capture angle.
    pub fn angle_coverage(&self) -> BTreeMap<u16, usize> {
        let mut m = BTreeMap::new();
        for c in &self.cutouts {
            *m.entry(c.angle_deg).or_insert(0) += 1;
        }
        m
    }

    /// Reads `cutouts/<category>/<id>_<angle>.png` and `backgrounds/*.png`.
    pub fn load(dir: &Path) -> Result<Self, DatagenError> {
        let mut problems = Vec::new();
        let cut_dir = dir.join(CUTOUT_DIR);
        let bg_dir = dir.join(BACKGROUND_DIR);
        for d in [&cut_dir, &bg_dir] {
            if !d.is_dir() {
                problems.push(format!("directory {} not found", d.display()));
            }
        }
        if !problems.is_empty() {
            return Err(DatagenError::MissingAssets(problems));
        }
        let mut set = AssetSet::default();
        for entry in sorted_entries(&cut_dir)? {
            let Some(name) = entry.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
                continue;
            };
            if !entry.is_dir() {
                continue;
            }
            let Some(cat) = ObjectCategory::from_name(&name) else {
                problems.push(format!("{}: unknown category directory", entry.display()));
                continue;
            };
            for file in sorted_entries(&entry)? {
                if file.extension().and_then(|e| e.to_str()) != Some("png") {
                    continue;
                }
                let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                let parsed = stem
                    .rsplit_once('_')
                    .and_then(|(id, a)| a.parse::<u16>().ok().map(|a| (id.to_string(), a)));
                let Some((id, angle)) = parsed else {
                    problems.push(format!("{}: expected <id>_<angle>.png", file.display()));
                    continue;
                };
                let img = image::open(&file).map_err(DatagenError::image(&file))?.into_rgba8();
                match CutoutAsset::new(id, cat, img, angle, size_hint(cat)) {
                    Ok(c) => set.cutouts.push(c),
                    Err(e) => problems.push(format!("{}: {e}", file.display())),
                }
            }
        }
        for file in sorted_entries(&bg_dir)? {
            if file.extension().and_then(|e| e.to_str()) != Some("png") {
                continue;
            }
            let id = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let img = image::open(&file).map_err(DatagenError::image(&file))?.into_rgb8();
            set.backgrounds.push(BackgroundAsset::new(id, img));
        }
        if problems.is_empty() {
            Ok(set)
        } else {
            Err(DatagenError::MissingAssets(problems))
        }
    }

    /// Writes the set in the layout [`AssetSet::load`] reads.
    pub fn write(&self, dir: &Path) -> Result<(), DatagenError> {
        for c in &self.cutouts {
            let d = dir.join(CUTOUT_DIR).join(c.category.name());
            fs::create_dir_all(&d).map_err(DatagenError::io(&d))?;
            let p = d.join(format!("{}_{}.png", c.id, c.angle_deg));
            c.image.save(&p).map_err(DatagenError::image(&p))?;
        }
        let d = dir.join(BACKGROUND_DIR);
        fs::create_dir_all(&d).map_err(DatagenError::io(&d))?;
        for b in &self.backgrounds {
            let p = d.join(format!("{}.png", b.id));
            b.image.save(&p).map_err(DatagenError::image(&p))?;
        }
        Ok(())
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>, DatagenError> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .map_err(DatagenError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    v.sort();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starter_covers_every_category_and_angle() {
        let s = AssetSet::starter();
        assert_eq!(s.cutouts.len(), 7 * 8);
        for cat in ObjectCategory::DETECTABLE {
            let angles: Vec<u16> = s.by_category(cat).iter().map(|c| c.angle_deg).collect();
            assert_eq!(angles, CAPTURE_ANGLES.to_vec(), "{cat}");
        }
        assert_eq!(s.angle_coverage().keys().copied().collect::<Vec<_>>(), CAPTURE_ANGLES.to_vec());
        assert!(s.backgrounds.iter().all(|b| b.fits(320, 320)));
        s.check(&DatasetConfig::default()).unwrap();
    }

    #[test]
    fn capture_angle_changes_the_view() {
        let a = starter_cutout(ObjectCategory::Tools, 0);
        let b = starter_cutout(ObjectCategory::Tools, 90);
        assert_ne!(a, b);
    }

    #[test]
    fn invalid_cutouts_rejected() {
        let opaque = RgbaImage::from_pixel(8, 8, Rgba([1, 2, 3, 255]));
        assert!(CutoutAsset::new("x", ObjectCategory::Parts, opaque.clone(), 0, 10.0).is_err());
        let img = starter_cutout(ObjectCategory::Parts, 0);
        assert!(CutoutAsset::new("x", ObjectCategory::Parts, img.clone(), 30, 10.0).is_err());
        assert!(CutoutAsset::new("x", ObjectCategory::Unknown, img, 0, 10.0).is_err());
    }

    #[test]
    fn missing_assets_listed() {
        let mut s = AssetSet::starter();
        s.cutouts.retain(|c| c.category != ObjectCategory::Vehicles);
        s.backgrounds.truncate(1);
        s.backgrounds[0].crop.w = 100;
        let err = s.check(&DatasetConfig::default()).unwrap_err().to_string();
        assert!(err.contains("vehicles") && err.contains("floor0"), "{err}");
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = AssetSet::starter();
        s.cutouts.truncate(9);
        s.write(dir.path()).unwrap();
        let back = AssetSet::load(dir.path()).unwrap();
        let key = |v: &AssetSet| {
            let mut k: Vec<String> = v.cutouts.iter().map(|c| c.key()).collect();
            k.sort();
            k
        };
        assert_eq!(key(&back), key(&s));
        for c in &s.cutouts {
            let b = back.cutouts.iter().find(|b| b.key() == c.key()).unwrap();
            assert_eq!(b.image, c.image);
        }
        assert_eq!(back.backgrounds.len(), 4);
        assert_eq!(back.backgrounds[0].image, s.backgrounds[0].image);
    }

    #[test]
    fn load_reports_missing_dirs() {
        let dir = tempfile::tempdir().unwrap();
        let err = AssetSet::load(dir.path()).unwrap_err();
        assert!(matches!(err, DatagenError::MissingAssets(ref v) if v.len() == 2));
    }
}
