use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use image::RgbImage;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    classes_txt, compose_scene, Annotation, AssetSet, CropRect, DatagenError, DatasetConfig, LightingMode, Split,
    CAPTURE_ANGLES,
};
use crate::decision::ObjectCategory;
use crate::exec::Execution;
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub class_id: usize,
    pub asset: String,
    pub capture_angle_deg: u16,
    pub angle_deg: f64,
    pub scale: f64,
    /// Pixel box `[x0, y0, x1, y1]`, far edges exclusive.
    pub bbox: [usize; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub index: usize,
    pub image: String,
    pub labels: String,
    pub split: Split,
    pub seed: u64,
    pub lighting: LightingMode,
    pub background: String,
    pub crop: CropRect,
    pub objects: Vec<ObjectRecord>,
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: DatasetConfig,
    pub classes: Vec<String>,
    pub images: Vec<ImageRecord>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, DatagenError> {
        let p = dir.join("manifest.json");
        let text = fs::read_to_string(&p).map_err(DatagenError::io(&p))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut m: BTreeMap<Split, usize> = Split::ALL.iter().map(|&s| (s, 0)).collect();
        for r in &self.images {
            *m.get_mut(&r.split).unwrap() += 1;
        }
        m
    }
}

/// Split of every index, in index order: the first `train` images train, the
/// next `val` validate, the rest test.
pub fn plan_splits(config: &DatasetConfig) -> Vec<Split> {
    (0..config.count).map(|i| config.split_of(i)).collect()
}

fn file_stem(index: usize) -> String {
    format!("{index:05}")
}

fn encode_png(img: &RgbImage) -> Result<Vec<u8>, DatagenError> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(DatagenError::image("<png encoder>"))?;
    Ok(buf.into_inner())
}

fn label_text(anns: &[Annotation]) -> String {
    anns.iter().map(|a| a.to_line() + "\n").collect()
}

// Everything about image `index` is drawn from its own seed, in a fixed order:
// object count, then (category, cutout) per object, lighting, background,
// then the composition itself.
fn render_image(
    config: &DatasetConfig,
    assets: &AssetSet,
    index: usize,
) -> Result<(RgbImage, Vec<Annotation>, ImageRecord), DatagenError> {
    let seed = derive_seed(config.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(config.objects_min..=config.objects_max);
    let by_cat: BTreeMap<ObjectCategory, Vec<_>> =
        config.categories.iter().map(|&c| (c, assets.by_category(c))).collect();
    let picks: Vec<_> = (0..n)
        .map(|_| {
            let cat = *config.categories.choose(&mut rng).expect("validated non-empty");
            *by_cat[&cat].choose(&mut rng).expect("checked assets")
        })
        .collect();
    let lighting = *config.lighting.choose(&mut rng).expect("validated non-empty");
    let bg = assets.backgrounds.choose(&mut rng).expect("checked assets");
    let comp = compose_scene(bg, &picks, &config.params(), lighting, config.width, config.height, &mut rng)?;
    let stem = file_stem(index);
    let objects = comp
        .placed
        .iter()
        .map(|&(k, p, b)| ObjectRecord {
            class_id: picks[k].category.class_id().expect("detectable"),
            asset: picks[k].key(),
            capture_angle_deg: picks[k].angle_deg,
            angle_deg: p.angle_deg,
            scale: p.scale,
            bbox: [b.x0, b.y0, b.x1, b.y1],
        })
        .collect();
    let record = ImageRecord {
        index,
        image: format!("images/{stem}.png"),
        labels: format!("labels/{stem}.txt"),
        split: config.split_of(index),
        seed,
        lighting,
        background: bg.id.clone(),
        crop: comp.crop,
        objects,
        dropped: comp.dropped,
    };
    Ok((comp.image, comp.annotations, record))
}

/// Encoded PNG bytes and label-file text of image `index`, exactly as
/// [`generate_dataset`] writes them.
pub fn regenerate_image(
    config: &DatasetConfig,
    assets: &AssetSet,
    index: usize,
) -> Result<(Vec<u8>, String), DatagenError> {
    let (img, anns, _) = render_image(config, assets, index)?;
    Ok((encode_png(&img)?, label_text(&anns)))
}

/// Writes `config.count` images with labels, `classes.txt` and
/// `manifest.json` under `out`. Config and assets are checked before anything
/// is written.
pub fn generate_dataset(
    config: &DatasetConfig,
    assets: &AssetSet,
    out: &Path,
    exec: Execution,
) -> Result<Manifest, DatagenError> {
    config.validate()?;
    assets.check(config)?;
    for sub in ["images", "labels"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).map_err(DatagenError::io(&d))?;
    }
    let records = exec.map_range(config.count, |i| -> Result<ImageRecord, DatagenError> {
        let (img, anns, rec) = render_image(config, assets, i)?;
        let png = out.join(&rec.image);
        fs::write(&png, encode_png(&img)?).map_err(DatagenError::io(&png))?;
        let txt = out.join(&rec.labels);
        fs::write(&txt, label_text(&anns)).map_err(DatagenError::io(&txt))?;
        Ok(rec)
    });
    let images = records.into_iter().collect::<Result<Vec<_>, _>>()?;
    let classes_path = out.join("classes.txt");
    fs::write(&classes_path, classes_txt()).map_err(DatagenError::io(&classes_path))?;
    let manifest = Manifest {
        config: config.clone(),
        classes: ObjectCategory::DETECTABLE.iter().map(|c| c.name().to_string()).collect(),
        images,
    };
    let mp = out.join("manifest.json");
    fs::write(&mp, serde_json::to_string_pretty(&manifest)?).map_err(DatagenError::io(&mp))?;
    Ok(manifest)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub images: usize,
    pub annotations: usize,
    pub violations: Vec<String>,
    pub per_class: BTreeMap<String, usize>,
    pub per_lighting: BTreeMap<String, usize>,
    pub per_angle: BTreeMap<u16, usize>,
    pub per_split: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a dataset directory against its manifest: files present, image
/// sizes, label syntax, boxes inside the image, class ids known and matching
/// the manifest, split sizes and disjointness. Problems land in
/// `violations`; the function itself does not fail.
pub fn validate_annotations(dir: &Path) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let manifest = match Manifest::load(dir) {
        Ok(m) => m,
        Err(e) => {
            rep.violations.push(format!("manifest: {e}"));
            return rep;
        }
    };
    let cfg = &manifest.config;
    match fs::read_to_string(dir.join("classes.txt")) {
        Ok(t) if t.lines().eq(manifest.classes.iter().map(String::as_str)) => {}
        Ok(_) => rep.violations.push("classes.txt disagrees with the manifest".into()),
        Err(e) => rep.violations.push(format!("classes.txt: {e}")),
    }
    if manifest.images.len() != cfg.count {
        rep.violations
            .push(format!("manifest lists {} images, config asks for {}", manifest.images.len(), cfg.count));
    }
    let mut seen_idx = BTreeSet::new();
    let mut seen_files = BTreeSet::new();
    for r in &manifest.images {
        let tag = &r.image;
        if !seen_idx.insert(r.index) || !seen_files.insert(r.image.clone()) {
            rep.violations.push(format!("{tag}: listed more than once"));
        }
        if r.split != cfg.split_of(r.index) {
            rep.violations.push(format!("{tag}: split {:?} disagrees with the index plan", r.split));
        }
        *rep.per_split.entry(format!("{:?}", r.split).to_lowercase()).or_insert(0) += 1;
        *rep.per_lighting.entry(r.lighting.to_string()).or_insert(0) += 1;
        match image::image_dimensions(dir.join(&r.image)) {
            Ok((w, h)) if (w as usize, h as usize) == (cfg.width, cfg.height) => {}
            Ok((w, h)) => rep.violations.push(format!("{tag}: size {w}×{h}")),
            Err(e) => rep.violations.push(format!("{tag}: {e}")),
        }
        rep.images += 1;
        let text = match fs::read_to_string(dir.join(&r.labels)) {
            Ok(t) => t,
            Err(e) => {
                rep.violations.push(format!("{}: {e}", r.labels));
                continue;
            }
        };
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != r.objects.len() {
            rep.violations.push(format!(
                "{}: {} boxes, manifest lists {} objects",
                r.labels,
                lines.len(),
                r.objects.len()
            ));
        }
        for (k, line) in lines.iter().enumerate() {
            let at = format!("{}:{}", r.labels, k + 1);
            let a = match Annotation::parse_line(line) {
                Ok(a) => a,
                Err(e) => {
                    rep.violations.push(format!("{at}: {e}"));
                    continue;
                }
            };
            rep.annotations += 1;
            if let Some(v) = a.violation() {
                rep.violations.push(format!("{at}: {v}"));
            }
            match manifest.classes.get(a.class_id) {
                Some(name) => *rep.per_class.entry(name.clone()).or_insert(0) += 1,
                None => rep.violations.push(format!("{at}: unknown class id {}", a.class_id)),
            }
            if let Some(o) = r.objects.get(k) {
                if o.class_id != a.class_id {
                    rep.violations.push(format!("{at}: class {} but manifest says {}", a.class_id, o.class_id));
                }
            }
        }
        for o in &r.objects {
            if !CAPTURE_ANGLES.contains(&o.capture_angle_deg) {
                rep.violations.push(format!("{tag}: capture angle {}", o.capture_angle_deg));
            }
            *rep.per_angle.entry(o.capture_angle_deg).or_insert(0) += 1;
        }
    }
    for (split, want) in [("train", cfg.train), ("val", cfg.val), ("test", cfg.test)] {
        let got = rep.per_split.get(split).copied().unwrap_or(0);
        if got != want {
            rep.violations.push(format!("split {split}: {got} images, config asks for {want}"));
        }
    }
    rep
}
