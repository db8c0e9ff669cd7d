use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

/// Per-item latency summary. `fps` is the rate implied by the median.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub samples: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub fps: f64,
}

impl TimingStats {
    /// Nearest-rank median and 99th percentile.
    pub fn from_ms(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = |p: f64| s[((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        let median = rank(0.5);
        Self {
            samples: s.len(),
            mean_ms: s.iter().sum::<f64>() / s.len() as f64,
            median_ms: median,
            p99_ms: rank(0.99),
            fps: if median > 0.0 { 1000.0 / median } else { f64::INFINITY },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config_digest: String,
    /// Named counters, e.g. frames, triggered, fail_safe.
    pub counts: BTreeMap<String, u64>,
    pub timing: TimingStats,
    pub exit_status: i32,
    /// Command-specific results (RMSE, output paths, aggregate action...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl RunReport {
    pub fn new(command: &str, config_digest: String) -> Self {
        Self {
            command: command.to_string(),
            config_digest,
            ..Self::default()
        }
    }

    pub fn count(&mut self, key: &str, n: u64) {
        *self.counts.entry(key.to_string()).or_insert(0) += n;
    }

    pub fn extra(&mut self, key: &str, v: impl Serialize) {
        self.extra
            .insert(key.to_string(), serde_json::to_value(v).expect("report value serializes"));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// SHA-256 over everything that configures a run: the bytes of each config
/// file and each output-affecting flag, tagged by name.
pub struct ConfigDigest {
    hasher: Sha256,
}

impl ConfigDigest {
    pub fn new(command: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        Self { hasher }
    }

    fn tagged(&mut self, tag: &str, bytes: &[u8]) {
        self.hasher.update([0u8]);
        self.hasher.update(tag.as_bytes());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    pub fn bytes(mut self, tag: &str, bytes: &[u8]) -> Self {
        self.tagged(tag, bytes);
        self
    }

    pub fn value(self, tag: &str, v: impl std::fmt::Display) -> Self {
        self.bytes(tag, v.to_string().as_bytes())
    }

    /// Hashes the file contents (or a directory's file names and contents),
    /// or records the absence of the optional input.
    pub fn file(mut self, tag: &str, path: Option<&Path>) -> std::io::Result<Self> {
        match path {
            None => self.tagged(tag, b"<none>"),
            Some(p) if p.is_dir() => {
                let mut entries: Vec<_> = std::fs::read_dir(p)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
                entries.sort();
                for e in entries.iter().filter(|e| e.is_file()) {
                    let name = e.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    self.tagged(&format!("{tag}/{name}"), &std::fs::read(e)?);
                }
            }
            Some(p) => self.tagged(tag, &std::fs::read(p)?),
        }
        Ok(self)
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_ranks() {
        let samples: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let t = TimingStats::from_ms(&samples);
        assert_eq!((t.median_ms, t.p99_ms), (50.0, 99.0));
        assert!((t.mean_ms - 50.5).abs() < 1e-12);
        assert!((t.fps - 20.0).abs() < 1e-12);
        assert_eq!(TimingStats::from_ms(&[]).samples, 0);
        assert_eq!(TimingStats::from_ms(&[4.0]).p99_ms, 4.0);
    }

    #[test]
    fn digest_tracks_bytes() {
        let d = |b: &[u8]| ConfigDigest::new("detect").bytes("calib", b).finish();
        assert_eq!(d(b"abc"), d(b"abc"));
        assert_ne!(d(b"abc"), d(b"abd"));
        // Tags keep boundaries: ("ab","c") differs from ("a","bc").
        let two = |a: &[u8], b: &[u8]| ConfigDigest::new("x").bytes("p", a).bytes("q", b).finish();
        assert_ne!(two(b"ab", b"c"), two(b"a", b"bc"));
        assert_ne!(
            ConfigDigest::new("x").value("seed", 1).finish(),
            ConfigDigest::new("x").value("seed", 2).finish()
        );
    }
}
