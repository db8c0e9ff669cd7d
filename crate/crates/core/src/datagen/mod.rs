//! Synthetic detector training data by cutout compositing.
//!
//! RGBA object cutouts (alpha = segmentation mask) are pasted onto crops of
//! floor images with a random count, position, in-plane rotation and scale,
//! then one of the five [`LightingMode`]s is applied to the composite. Every
//! image has its own seed derived from the master seed, so any one image can
//! be regenerated in isolation.
//!
//! Output layout:
//!
//! ```text
//! images/00000.png      composite RGB images
//! labels/00000.txt      one "class_id cx cy w h" line per object, normalized
//! manifest.json         config, split, seed, lighting and objects per image
//! classes.txt           class names, line number = class id
//! ```
//!
//! A procedural starter set of cutouts and floor textures ([`AssetSet::starter`])
//! lets everything run without a photographed asset corpus.

mod assets;
mod compose;
mod dataset;
mod ingest;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::ObjectCategory;
pub use crate::lighting::{apply_lighting, LightingMode};

pub use assets::{AssetSet, BackgroundAsset, CropRect, CutoutAsset, CAPTURE_ANGLES};
pub use compose::{
    box_iou, compose_scene, placed_bounds, stamp_cutout, Composite, ComposeParams, PixelBox, Placement,
};
pub use dataset::{
    generate_dataset, plan_splits, regenerate_image, validate_annotations, ImageRecord, Manifest,
    ObjectRecord, ValidationReport,
};
pub use ingest::{ingest_detections, DetectorOutput};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("invalid asset {id}: {reason}")]
    Asset { id: String, reason: String },
    #[error("missing assets:\n  {}", .0.join("\n  "))]
    MissingAssets(Vec<String>),
    #[error("could not place cutout {id} after {retries} attempts")]
    Placement { id: String, retries: usize },
    #[error("{path}: {message}")]
    Ingest { path: String, message: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DatagenError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub(crate) fn image(path: impl Into<PathBuf>) -> impl FnOnce(image::ImageError) -> Self {
        let path = path.into();
        move |source| Self::Image { path, source }
    }
}

/// One object box, normalized to the image size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub class_id: usize,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Annotation {
    pub fn from_box(class_id: usize, b: PixelBox, width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        Self {
            class_id,
            cx: (b.x0 + b.x1) as f64 / 2.0 / w,
            cy: (b.y0 + b.y1) as f64 / 2.0 / h,
            w: (b.x1 - b.x0) as f64 / w,
            h: (b.y1 - b.y0) as f64 / h,
        }
    }

    /// `class_id cx cy w h` with six decimals.
    pub fn to_line(&self) -> String {
        format!("{} {:.6} {:.6} {:.6} {:.6}", self.class_id, self.cx, self.cy, self.w, self.h)
    }

    pub fn parse_line(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(format!("expected 5 fields, found {}", f.len()));
        }
        let class_id = f[0].parse().map_err(|e| format!("class id {:?}: {e}", f[0]))?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        Ok(Self {
            class_id,
            cx: num(f[1])?,
            cy: num(f[2])?,
            w: num(f[3])?,
            h: num(f[4])?,
        })
    }

    /// Problems with this box, or `None` when positive-sized and inside the
    /// unit square (up to the six-decimal rounding).
    pub fn violation(&self) -> Option<String> {
        const EPS: f64 = 1e-6;
        let vals = [self.cx, self.cy, self.w, self.h];
        if vals.iter().any(|v| !v.is_finite()) {
            return Some("non-finite coordinate".into());
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Some(format!("non-positive size {}×{}", self.w, self.h));
        }
        let (x0, x1) = (self.cx - self.w / 2.0, self.cx + self.w / 2.0);
        let (y0, y1) = (self.cy - self.h / 2.0, self.cy + self.h / 2.0);
        if x0 < -EPS || y0 < -EPS || x1 > 1.0 + EPS || y1 > 1.0 + EPS {
            return Some(format!("box [{x0:.6}, {y0:.6}, {x1:.6}, {y1:.6}] leaves the image"));
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub count: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub lighting: Vec<LightingMode>,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Largest IoU allowed between two placed boxes.
    pub max_iou: f64,
    pub max_retries: usize,
    pub categories: Vec<ObjectCategory>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            count: 5000,
            objects_min: 1,
            objects_max: 5,
            scale_min: 0.5,
            scale_max: 1.5,
            lighting: LightingMode::ALL.to_vec(),
            train: 3500,
            val: 500,
            test: 1000,
            seed: 0,
            width: 320,
            height: 320,
            max_iou: 0.3,
            max_retries: 50,
            categories: ObjectCategory::DETECTABLE.to_vec(),
        }
    }
}

impl DatasetConfig {
    /// Default config shrunk to `count` images with the 70/10/20 split
    /// (rounding down val and test).
    pub fn scaled(count: usize, seed: u64) -> Self {
        let val = count / 10;
        let test = count / 5;
        Self {
            count,
            train: count - val - test,
            val,
            test,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |m: String| Err(DatagenError::Config(m));
        if self.train + self.val + self.test != self.count {
            return bad(format!(
                "split {}/{}/{} does not sum to count {}",
                self.train, self.val, self.test, self.count
            ));
        }
        if self.objects_min > self.objects_max {
            return bad(format!("objects range {}..={} is empty", self.objects_min, self.objects_max));
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max.is_finite()) {
            return bad(format!("scale range [{}, {}] is empty or non-positive", self.scale_min, self.scale_max));
        }
        if self.lighting.is_empty() {
            return bad("no lighting modes".into());
        }
        if self.categories.is_empty() {
            return bad("no categories".into());
        }
        if let Some(c) = self.categories.iter().find(|c| c.class_id().is_none()) {
            return bad(format!("category {c} has no class id"));
        }
        if self.width == 0 || self.height == 0 {
            return bad(format!("image size {}×{}", self.width, self.height));
        }
        if !(0.0..=1.0).contains(&self.max_iou) {
            return bad(format!("max_iou {} not in [0, 1]", self.max_iou));
        }
        if self.max_retries == 0 {
            return bad("max_retries must be positive".into());
        }
        Ok(())
    }

    pub fn split_of(&self, index: usize) -> Split {
        if index < self.train {
            Split::Train
        } else if index < self.train + self.val {
            Split::Val
        } else {
            Split::Test
        }
    }

    pub fn params(&self) -> ComposeParams {
        ComposeParams {
            scale_min: self.scale_min,
            scale_max: self.scale_max,
            max_iou: self.max_iou,
            max_retries: self.max_retries,
        }
    }
}

/// Class names in class-id order, one per line.
pub fn classes_txt() -> String {
    ObjectCategory::DETECTABLE
        .iter()
        .map(|c| format!("{}\n", c.name()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotation_line_round_trip() {
        let a = Annotation {
            class_id: 3,
            cx: 0.5,
            cy: 0.25,
            w: 0.125,
            h: 0.0625,
        };
        assert_eq!(a.to_line(), "3 0.500000 0.250000 0.125000 0.062500");
        assert_eq!(Annotation::parse_line(&a.to_line()).unwrap(), a);
        assert!(Annotation::parse_line("3 0.5 0.5").is_err());
        assert!(Annotation::parse_line("x 0.5 0.5 0.1 0.1").is_err());
    }

    #[test]
    fn violations() {
        let ok = Annotation {
            class_id: 0,
            cx: 0.5,
            cy: 0.5,
            w: 1.0,
            h: 0.2,
        };
        assert_eq!(ok.violation(), None);
        assert!(Annotation { w: 0.0, ..ok }.violation().is_some());
        assert!(Annotation { cx: 0.6, ..ok }.violation().is_some());
        assert!(Annotation { cy: f64::NAN, ..ok }.violation().is_some());
    }

    #[test]
    fn default_and_scaled_splits() {
        let d = DatasetConfig::default();
        d.validate().unwrap();
        assert_eq!((d.count, d.train, d.val, d.test), (5000, 3500, 500, 1000));
        let s = DatasetConfig::scaled(10, 1);
        assert_eq!((s.train, s.val, s.test), (7, 1, 2));
        assert_eq!(s.split_of(6), Split::Train);
        assert_eq!(s.split_of(7), Split::Val);
        assert_eq!(s.split_of(9), Split::Test);
    }

    #[test]
    fn config_checks() {
        let bad = DatasetConfig {
            train: 1,
            ..DatasetConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DatasetConfig {
            objects_min: 6,
            ..DatasetConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DatasetConfig {
            lighting: vec![],
            ..DatasetConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DatasetConfig {
            categories: vec![ObjectCategory::Unknown],
            ..DatasetConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn classes_file_matches_ids() {
        let txt = classes_txt();
        for (i, line) in txt.lines().enumerate() {
            assert_eq!(ObjectCategory::from_name(line).unwrap().class_id(), Some(i));
        }
        assert_eq!(txt.lines().count(), 7);
    }
}
