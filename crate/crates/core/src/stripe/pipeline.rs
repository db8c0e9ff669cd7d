use serde::{Deserialize, Serialize};

use super::continuity::{continuity_check, ContinuityReport};
use super::displacement::{estimate_heights, measure_displacement, Baseline, DisplacementMap, ObjectHeight};
use super::hough::{hough_dominant_line, HoughLine};
use super::hsv::{threshold_stripe_adaptive, HsvThreshold, PixelRect};
use super::morph::morph_open;
use super::profile::{extract_profile, spatial_denoise, StripeProfile};
use super::rectify::{rectify_mask, RectifiedMask, RectifyMap};
use super::temporal::{temporal_denoise, TemporalState};
use super::PipelineError;
use crate::exec::Execution;
use crate::geometry::{Calibration, Point};
use crate::Frame;

/// Tunables for the frame pipeline. Every field has a default, so a partial
/// JSON object is accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Hue window in degrees; wraps through 0° when `hue_lo > hue_hi`.
    pub hue_lo: f32,
    pub hue_hi: f32,
    /// Fixed saturation/value floors.
    pub sat_min: f32,
    pub val_min: f32,
    /// Per-frame percentile of the in-ROI distribution that may raise the
    /// floors above; `null` disables adaptation for that channel.
    pub sat_pct: Option<f32>,
    pub val_pct: Option<f32>,
    pub morph_radius: usize,
    /// Cells farther than this from the dominant line are treated as clutter
    /// by the continuity check.
    pub line_band_mm: f64,
    pub window_mm: f64,
    pub temporal_frames: usize,
    pub gap_threshold_mm: f64,
    /// Displacement noise floor: `max(factor · baseline std, min)`.
    pub noise_floor_factor: f64,
    pub min_noise_floor_mm: f64,
    pub min_run_columns: usize,
    pub max_hole_columns: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            hue_lo: 340.0,
            hue_hi: 20.0,
            sat_min: 0.3,
            val_min: 0.25,
            sat_pct: Some(97.0),
            val_pct: Some(50.0),
            morph_radius: 1,
            line_band_mm: 12.0,
            window_mm: 5.0,
            temporal_frames: 3,
            gap_threshold_mm: 5.0,
            noise_floor_factor: 2.0,
            min_noise_floor_mm: 1.5,
            min_run_columns: 3,
            max_hole_columns: 2,
        }
    }
}

impl PipelineConfig {
    pub fn threshold(&self) -> HsvThreshold {
        HsvThreshold {
            hue_lo: self.hue_lo,
            hue_hi: self.hue_hi,
            sat_min: self.sat_min,
            val_min: self.val_min,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.threshold().validate().map_err(PipelineError::Config)?;
        let pct_ok = |p: Option<f32>| p.is_none_or(|p| (0.0..=100.0).contains(&p));
        let checks = [
            (pct_ok(self.sat_pct) && pct_ok(self.val_pct), "percentiles must lie in [0, 100]"),
            (self.window_mm > 0.0, "window_mm must be positive"),
            (self.gap_threshold_mm > 0.0, "gap_threshold_mm must be positive"),
            (self.temporal_frames >= 1, "temporal_frames must be at least 1"),
            (self.line_band_mm > 0.0, "line_band_mm must be positive"),
            (
                self.noise_floor_factor >= 0.0 && self.min_noise_floor_mm >= 0.0,
                "noise floor parameters must be non-negative",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(PipelineError::Config((*msg).into())),
            None => Ok(()),
        }
    }
}

/// Stateless per-frame result: everything before the temporal vote.
#[derive(Clone, Debug)]
pub struct FrameAnalysis {
    pub timestamp_ms: u64,
    pub line: Option<HoughLine>,
    /// Band-filtered, spatially denoised profile for the continuity check.
    pub profile: StripeProfile,
    /// No covered column showed the stripe.
    pub no_stripe: bool,
    pub displacement: Option<DisplacementMap>,
    pub heights: Vec<ObjectHeight>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventGap {
    pub start_mm: f64,
    pub end_mm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventHeight {
    pub pos_mm: f64,
    pub h_obj_mm: f64,
    pub valid: bool,
}

/// One JSON-lines record of the detector output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptionEvent {
    pub ts_ms: u64,
    pub triggered: bool,
    pub max_gap_mm: f64,
    pub gaps: Vec<EventGap>,
    pub heights: Vec<EventHeight>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub no_stripe: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PerceptionEvent {
    /// Triggered event carrying the failure.
    pub fn fail_safe(ts_ms: u64, err: &PipelineError) -> Self {
        Self {
            ts_ms,
            triggered: true,
            max_gap_mm: 0.0,
            gaps: Vec::new(),
            heights: Vec::new(),
            no_stripe: false,
            error: Some(err.to_string()),
        }
    }

    fn from_report(report: &ContinuityReport, heights: &[ObjectHeight]) -> Self {
        Self {
            ts_ms: report.timestamp_ms,
            triggered: report.triggered,
            max_gap_mm: report.max_gap_mm,
            gaps: report
                .gaps
                .iter()
                .map(|g| EventGap {
                    start_mm: g.start_mm,
                    end_mm: g.end_mm,
                })
                .collect(),
            heights: heights
                .iter()
                .map(|h| EventHeight {
                    pos_mm: h.pos_mm,
                    h_obj_mm: h.h_obj_mm,
                    valid: h.valid,
                })
                .collect(),
            no_stripe: report.no_stripe,
            error: None,
        }
    }
}

/// Calibrated frame-to-event pipeline for one camera.
///
/// [`analyze`](Self::analyze) is pure and may run on many frames at once;
/// [`fold`](Self::fold) applies the temporal vote and must see frames in
/// timestamp order.
#[derive(Clone, Debug)]
pub struct StripeDetector {
    calibration: Calibration,
    config: PipelineConfig,
    map: RectifyMap,
    region: PixelRect,
    baseline: Option<Baseline>,
    /// Floor stripe fitted to the baseline; once known it replaces the
    /// per-frame Hough line as the band-filter reference, so a long object
    /// whose displaced stripe outvotes the floor cannot capture the band.
    baseline_line: Option<FloorLine>,
}

impl StripeDetector {
    pub fn new(calibration: Calibration, config: PipelineConfig) -> Result<Self, PipelineError> {
        calibration.validate()?;
        config.validate()?;
        let intr = &calibration.intrinsics;
        let map = RectifyMap::new(&calibration.homography, calibration.roi, intr.width, intr.height);
        let region = map
            .support(2 + config.morph_radius)
            .ok_or_else(|| PipelineError::Config("region of interest lies outside the image".into()))?;
        Ok(Self {
            calibration,
            config,
            map,
            region,
            baseline: None,
            baseline_line: None,
        })
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn baseline(&self) -> Option<&Baseline> {
        self.baseline.as_ref()
    }

    pub fn set_baseline(&mut self, baseline: Option<Baseline>) {
        self.baseline_line = baseline.as_ref().and_then(FloorLine::fit_baseline);
        self.baseline = baseline;
    }

    pub fn new_state(&self) -> TemporalState {
        TemporalState::new(self.config.temporal_frames).expect("validated window")
    }

    /// Build the displacement baseline from empty-scene frames.
    pub fn calibrate_baseline(&mut self, frames: &[Frame]) -> Result<&Baseline, PipelineError> {
        let profiles = frames
            .iter()
            .map(|f| self.stripe_cells(f).map(|(rect, _)| extract_profile(&self.band_filter(&rect.0, rect.1))))
            .collect::<Result<Vec<_>, _>>()?;
        self.set_baseline(Some(Baseline::from_profiles(&profiles)?));
        Ok(self.baseline.as_ref().unwrap())
    }

    /// Threshold, open and rectify; returns the rectified mask with the image
    /// line mapped to the floor (if any stripe was found), plus the line.
    #[allow(clippy::type_complexity)]
    fn stripe_cells(
        &self,
        frame: &Frame,
    ) -> Result<((RectifiedMask, Option<FloorLine>), Option<HoughLine>), PipelineError> {
        let intr = &self.calibration.intrinsics;
        if (frame.width(), frame.height()) != (intr.width, intr.height) {
            return Err(PipelineError::FrameSize {
                got_w: frame.width(),
                got_h: frame.height(),
                want_w: intr.width,
                want_h: intr.height,
            });
        }
        let (mask, _) = threshold_stripe_adaptive(
            frame,
            self.region,
            &self.config.threshold(),
            self.config.sat_pct,
            self.config.val_pct,
        );
        let mask = morph_open(&mask, self.config.morph_radius);
        let line = match hough_dominant_line(&mask) {
            Ok(l) => Some(l),
            Err(PipelineError::NoLine) => None,
            Err(e) => return Err(e),
        };
        let floor_line = match line {
            Some(l) => Some(self.floor_line(&l)?),
            None => None,
        };
        Ok(((rectify_mask(&mask, &self.map), floor_line), line))
    }

    fn floor_line(&self, line: &HoughLine) -> Result<FloorLine, PipelineError> {
        let r = self.region;
        let centre = Point::new(0.5 * (r.x0 + r.x1) as f64, 0.5 * (r.y0 + r.y1) as f64);
        let p0 = line.project(centre);
        let (dx, dy) = line.direction();
        let p1 = Point::new(p0.x + 200.0 * dx, p0.y + 200.0 * dy);
        let h = &self.calibration.homography;
        let (a, b) = (h.apply(p0)?, h.apply(p1)?);
        let (ux, uy) = (b.x - a.x, b.y - a.y);
        let n = ux.hypot(uy);
        if n < 1e-9 {
            return Err(PipelineError::NoLine);
        }
        Ok(FloorLine {
            origin: (a.x, a.y),
            normal: (-uy / n, ux / n),
        })
    }

    fn band_filter(&self, rect: &RectifiedMask, line: Option<FloorLine>) -> RectifiedMask {
        let mut out = rect.clone();
        match line {
            Some(l) => {
                for r in 0..rect.rows {
                    for c in 0..rect.cols {
                        let (x, y) = rect.cell_mm(r, c);
                        if l.distance(x, y) > self.config.line_band_mm {
                            out.cells[r * rect.cols + c] = false;
                        }
                    }
                }
            }
            None => out.cells.fill(false),
        }
        out
    }

    /// Every stage before the temporal vote.
    pub fn analyze(&self, frame: &Frame) -> Result<FrameAnalysis, PipelineError> {
        let ((rect, floor_line), line) = self.stripe_cells(frame)?;
        // No stripe pixels at all still means no stripe, whatever the reference.
        let reference = floor_line.and(self.baseline_line).or(floor_line);
        let raw = extract_profile(&self.band_filter(&rect, reference));
        let no_stripe = raw.present_count() == 0;
        let profile = spatial_denoise(&raw, self.config.window_mm);

        let (displacement, heights) = match &self.baseline {
            Some(b) => {
                let noise = b.noise_floor(self.config.noise_floor_factor, self.config.min_noise_floor_mm);
                let elevated = extract_profile(&b.remove_floor_stripe(&rect, noise));
                let map = measure_displacement(Some(b), &elevated, noise)?;
                let heights = estimate_heights(
                    &map,
                    &self.calibration.rig,
                    &self.calibration.intrinsics,
                    self.config.min_run_columns,
                    self.config.max_hole_columns,
                );
                (Some(map), heights)
            }
            None => (None, Vec::new()),
        };
        Ok(FrameAnalysis {
            timestamp_ms: frame.timestamp_ms,
            line,
            profile,
            no_stripe,
            displacement,
            heights,
        })
    }

    /// Temporal vote and continuity check. Total stripe loss in the current
    /// frame triggers immediately, bypassing the vote.
    pub fn fold(&self, state: &mut TemporalState, analysis: &FrameAnalysis) -> Result<PerceptionEvent, PipelineError> {
        let voted = temporal_denoise(state, &analysis.profile)?;
        let report = if analysis.no_stripe {
            continuity_check(&analysis.profile, self.config.gap_threshold_mm, analysis.timestamp_ms)
        } else {
            continuity_check(&voted, self.config.gap_threshold_mm, analysis.timestamp_ms)
        };
        Ok(PerceptionEvent::from_report(&report, &analysis.heights))
    }

    /// Full pipeline for one frame; any stage error yields a fail-safe event.
    pub fn process_frame(&self, frame: &Frame, state: &mut TemporalState) -> PerceptionEvent {
        match self.analyze(frame).and_then(|a| self.fold(state, &a)) {
            Ok(ev) => ev,
            Err(e) => {
                log::warn!("frame {}: {e}", frame.timestamp_ms);
                PerceptionEvent::fail_safe(frame.timestamp_ms, &e)
            }
        }
    }

    /// Analyze a batch with `exec`, then fold in order.
    pub fn process_batch(&self, frames: &[Frame], state: &mut TemporalState, exec: Execution) -> Vec<PerceptionEvent> {
        let analyses = exec.map(frames, |f| self.analyze(f));
        analyses
            .into_iter()
            .zip(frames)
            .map(|(a, f)| match a.and_then(|a| self.fold(state, &a)) {
                Ok(ev) => ev,
                Err(e) => PerceptionEvent::fail_safe(f.timestamp_ms, &e),
            })
            .collect()
    }
}

/// Dominant stripe line on the floor plane.
#[derive(Clone, Copy, Debug)]
struct FloorLine {
    origin: (f64, f64),
    normal: (f64, f64),
}

impl FloorLine {
    /// Least-squares line `x = a + s·y` through the baseline centres.
    fn fit_baseline(b: &Baseline) -> Option<Self> {
        let pts: Vec<(f64, f64)> = b
            .centers_mm
            .iter()
            .enumerate()
            .filter_map(|(c, x)| x.map(|x| (x, b.y_origin_mm + (c as f64 + 0.5) * b.column_pitch_mm)))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (my, mx) = (pts.iter().map(|p| p.1).sum::<f64>() / n, pts.iter().map(|p| p.0).sum::<f64>() / n);
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.1 - my) * (p.0 - mx)).sum();
        if syy <= 0.0 {
            return None;
        }
        let s = sxy / syy;
        let norm = s.hypot(1.0);
        Some(Self {
            origin: (mx, my),
            normal: (1.0 / norm, -s / norm),
        })
    }

    fn distance(&self, x: f64, y: f64) -> f64 {
        ((x - self.origin.0) * self.normal.0 + (y - self.origin.1) * self.normal.1).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrips_and_accepts_partial_json() {
        let c: PipelineConfig = serde_json::from_str(r#"{"gap_threshold_mm": 8, "sat_pct": null}"#).unwrap();
        assert_eq!(c.gap_threshold_mm, 8.0);
        assert_eq!(c.sat_pct, None);
        assert_eq!(c.window_mm, 5.0);
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig {
            gap_threshold_mm: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn event_json_shape() {
        let ev = PerceptionEvent {
            ts_ms: 20,
            triggered: true,
            max_gap_mm: 80.0,
            gaps: vec![EventGap {
                start_mm: 260.0,
                end_mm: 340.0,
            }],
            heights: vec![EventHeight {
                pos_mm: 300.0,
                h_obj_mm: 60.2,
                valid: true,
            }],
            no_stripe: false,
            error: None,
        };
        let v: serde_json::Value = serde_json::to_value(&ev).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 5);
        for k in ["ts_ms", "triggered", "max_gap_mm", "gaps", "heights"] {
            assert!(keys.contains(&k));
        }
        let fs = PerceptionEvent::fail_safe(3, &PipelineError::NoLine);
        assert!(fs.triggered && fs.error.is_some());
    }
}
