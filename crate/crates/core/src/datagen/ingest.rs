use serde::{Deserialize, Serialize};

use super::DatagenError;
use crate::decision::{DetectionEvent, ObjectCategory};

/// One JSON-lines record from an external detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorOutput {
    pub image: String,
    pub class_id: usize,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<char>,
}

impl DetectorOutput {
    /// Tier-3 event for this record. The object size is the larger box side
    /// times `mm_per_unit` (millimetres per normalized image unit, from the
    /// camera calibration).
    pub fn to_event(&self, default_zone: char, mm_per_unit: f64, default_ts_ms: u64) -> Result<DetectionEvent, String> {
        if !(mm_per_unit > 0.0 && mm_per_unit.is_finite()) {
            return Err(format!("mm per unit {mm_per_unit} must be positive"));
        }
        let category =
            ObjectCategory::from_class_id(self.class_id).ok_or_else(|| format!("unknown class id {}", self.class_id))?;
        let [_, _, w, h] = self.bbox;
        if !(w >= 0.0 && h >= 0.0 && w.is_finite() && h.is_finite()) {
            return Err(format!("box size {w}×{h}"));
        }
        let ev = DetectionEvent::classified(
            self.zone.unwrap_or(default_zone),
            category,
            self.confidence,
            Some(w.max(h) * mm_per_unit),
            self.ts_ms.unwrap_or(default_ts_ms),
        );
        ev.validate().map_err(|e| e.to_string())?;
        Ok(ev)
    }
}

/// Converts JSON-lines detector output to tier-3 events. Records without
/// `ts_ms` use their line number; records without `zone` use `default_zone`.
/// Blank lines are skipped.
pub fn ingest_detections(
    text: &str,
    source: &str,
    default_zone: char,
    mm_per_unit: f64,
) -> Result<Vec<DetectionEvent>, DatagenError> {
    let fail = |line: usize, message: String| DatagenError::Ingest {
        path: format!("{source}:{line}"),
        message,
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let d: DetectorOutput = serde_json::from_str(line).map_err(|e| fail(n, e.to_string()))?;
        out.push(d.to_event(default_zone, mm_per_unit, n as u64).map_err(|m| fail(n, m))?);
    }
    Ok(out)
}
