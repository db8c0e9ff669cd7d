use nearfield::datagen::{generate_dataset, validate_annotations, AssetSet, DatagenError, DatasetConfig, Split};
use nearfield::exec::Execution;

use super::parse_json;
use crate::args::GenArgs;
use crate::report::{ConfigDigest, RunReport, TimingStats};
use crate::CliError;

fn datagen_error(e: DatagenError) -> CliError {
    match e {
        DatagenError::Io { .. } | DatagenError::Image { .. } | DatagenError::Placement { .. } => CliError::runtime(e),
        _ => CliError::config(e),
    }
}

pub(crate) fn run(a: &GenArgs) -> Result<RunReport, CliError> {
    let mut cfg: DatasetConfig = match &a.config {
        Some(p) => parse_json(p)?,
        None => DatasetConfig::default(),
    };
    if let Some(n) = a.count {
        // Keep everything else from the config, rescale the split.
        let s = DatasetConfig::scaled(n, cfg.seed);
        (cfg.count, cfg.train, cfg.val, cfg.test) = (s.count, s.train, s.val, s.test);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(datagen_error)?;
    let assets = match &a.assets {
        Some(dir) => AssetSet::load(dir).map_err(datagen_error)?,
        None => AssetSet::starter(),
    };
    let digest = ConfigDigest::new("gen")
        .bytes("config", serde_json::to_string(&cfg).expect("config serializes").as_bytes())
        .file("assets", a.assets.as_deref())
        .map_err(CliError::config)?
        .finish();
    let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };

    let t0 = std::time::Instant::now();
    let manifest = generate_dataset(&cfg, &assets, &a.out, exec).map_err(datagen_error)?;
    let elapsed = t0.elapsed().as_secs_f64() * 1e3;
    let rep = validate_annotations(&a.out);

    let mut report = RunReport::new("gen", digest);
    report.count("images", manifest.images.len() as u64);
    report.count("annotations", rep.annotations as u64);
    report.count("dropped", manifest.images.iter().map(|r| r.dropped as u64).sum());
    report.count("violations", rep.violations.len() as u64);
    for (split, n) in manifest.split_counts() {
        report.count(&format!("split_{}", split_name(split)), n as u64);
    }
    report.extra("per_class", &rep.per_class);
    report.extra("per_lighting", &rep.per_lighting);
    report.extra("out", a.out.display().to_string());
    if cfg.count > 0 {
        // Per-image wall time; images are rendered in parallel so only the mean is known.
        report.timing = TimingStats::from_ms(&[elapsed / cfg.count as f64]);
    }
    if !rep.is_clean() {
        for v in rep.violations.iter().take(20) {
            log::error!("{v}");
        }
        return Err(CliError::runtime(format!("{} annotation violations", rep.violations.len())));
    }
    println!(
        "{} images, {} annotations -> {}",
        manifest.images.len(),
        rep.annotations,
        a.out.display()
    );
    Ok(report)
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Val => "val",
        Split::Test => "test",
    }
}
