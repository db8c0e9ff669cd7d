use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nearfield::datagen::{
    generate_dataset, regenerate_image, validate_annotations, AssetSet, DatasetConfig, CAPTURE_ANGLES,
};
use nearfield::decision::ObjectCategory;
use nearfield::exec::Execution;

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["", "images", "labels"] {
        for e in fs::read_dir(dir.join(sub)).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn smoke_dataset_is_reproducible_and_valid() {
    let assets = AssetSet::starter();
    let cfg = DatasetConfig::scaled(20, 2024);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = generate_dataset(&cfg, &assets, a.path(), Execution::Parallel).unwrap();
    generate_dataset(&cfg, &assets, b.path(), Execution::Sequential).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.len(), 20 * 2 + 2);
    assert!(ta == tb, "parallel and sequential runs differ");

    let counts = m.split_counts();
    assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![14, 2, 4]);

    let rep = validate_annotations(a.path());
    assert!(rep.is_clean(), "{:?}", rep.violations);
    assert_eq!(rep.images, 20);
    assert_eq!(rep.annotations, m.images.iter().map(|r| r.objects.len()).sum::<usize>());

    // Any image regenerates alone from (config, index).
    for idx in [0, 13, 19] {
        let (png, labels) = regenerate_image(&cfg, &assets, idx).unwrap();
        assert_eq!(png, ta[&format!("images/{idx:05}.png")]);
        assert_eq!(labels.as_bytes(), &ta[&format!("labels/{idx:05}.txt")][..]);
    }
}

#[test]
fn different_seed_changes_output() {
    let assets = AssetSet::starter();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_dataset(&DatasetConfig::scaled(10, 1), &assets, a.path(), Execution::Sequential).unwrap();
    generate_dataset(&DatasetConfig::scaled(10, 2), &assets, b.path(), Execution::Sequential).unwrap();
    assert_ne!(tree(a.path())["images/00000.png"], tree(b.path())["images/00000.png"]);
}

#[test]
fn corrupted_box_is_reported() {
    let assets = AssetSet::starter();
    let dir = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig::scaled(10, 5);
    generate_dataset(&cfg, &assets, dir.path(), Execution::Sequential).unwrap();
    let p = dir.path().join("labels/00002.txt");
    let text = fs::read_to_string(&p).unwrap();
    let first = text.lines().next().unwrap();
    let mut f: Vec<&str> = first.split(' ').collect();
    f[3] = "0.000000";
    let corrupted = text.replacen(first, &f.join(" "), 1);
    fs::write(&p, corrupted).unwrap();
    fs::remove_file(dir.path().join("images/00007.png")).unwrap();

    let rep = validate_annotations(dir.path());
    assert!(rep.violations.iter().any(|v| v.contains("00002.txt:1") && v.contains("non-positive")), "{:?}", rep.violations);
    assert!(rep.violations.iter().any(|v| v.contains("00007.png")), "{:?}", rep.violations);
}

#[test]
fn angle_coverage_and_class_balance() {
    let assets = AssetSet::starter();
    let dir = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig::scaled(300, 9);
    generate_dataset(&cfg, &assets, dir.path(), Execution::Parallel).unwrap();
    let rep = validate_annotations(dir.path());
    assert!(rep.is_clean(), "{:?}", rep.violations);
    assert_eq!(rep.per_angle.keys().copied().collect::<Vec<_>>(), CAPTURE_ANGLES.to_vec());
    assert_eq!(rep.per_lighting.len(), 5);

    // Each class should get at least count·min_objects / (2·classes), and,
    // as a binomial, stay within 3σ of its share of all annotations.
    let k = ObjectCategory::DETECTABLE.len() as f64;
    let n = rep.annotations as f64;
    let floor = (cfg.count * cfg.objects_min) as f64 / (2.0 * k);
    for cat in ObjectCategory::DETECTABLE {
        let c = rep.per_class.get(cat.name()).copied().unwrap_or(0) as f64;
        assert!(c >= floor, "{cat}: {c} < {floor}");
        let (mean, sd) = (n / k, (n * (1.0 / k) * (1.0 - 1.0 / k)).sqrt());
        assert!((c - mean).abs() <= 3.0 * sd, "{cat}: {c} vs {mean} ± {sd}");
    }
}
