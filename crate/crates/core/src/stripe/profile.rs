use serde::{Deserialize, Serialize};

use super::rectify::RectifiedMask;

/// Stripe measurement in one grid column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripeSample {
    /// Centroid distance outward from the AMR edge, mm.
    pub center_mm: f64,
    pub width_mm: f64,
}

/// Per-column stripe record over the rectified grid. Columns run along the
/// AMR edge; `y_origin_mm` is the near edge of column 0.
///
/// `present[c]` is the presence verdict; `samples[c]` carries a measurement
/// only where the stripe is present (a temporally voted column may be present
/// without one during warm-up). Columns without image support are not
/// `covered` and take no part in continuity evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripeProfile {
    pub present: Vec<bool>,
    pub samples: Vec<Option<StripeSample>>,
    pub covered: Vec<bool>,
    pub mm_per_px: f64,
    pub column_pitch_mm: f64,
    pub y_origin_mm: f64,
}

impl StripeProfile {
    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().zip(&self.covered).filter(|(p, c)| **p && **c).count()
    }

    /// Near edge of column `col` along the AMR edge, mm.
    pub fn column_start_mm(&self, col: usize) -> f64 {
        self.y_origin_mm + col as f64 * self.column_pitch_mm
    }

    pub fn column_center_mm(&self, col: usize) -> f64 {
        self.column_start_mm(col) + 0.5 * self.column_pitch_mm
    }

    pub fn same_geometry(&self, other: &StripeProfile) -> bool {
        self.len() == other.len()
            && self.mm_per_px == other.mm_per_px
            && self.column_pitch_mm == other.column_pitch_mm
            && self.y_origin_mm == other.y_origin_mm
            && self.covered == other.covered
    }
}

/// Centroid row and thickness of the true cells in each grid column.
pub fn extract_profile(mask: &RectifiedMask) -> StripeProfile {
    let pitch = mask.grid.cell_mm;
    let mut present = vec![false; mask.cols];
    let mut samples = vec![None; mask.cols];
    let mut covered = vec![false; mask.cols];
    for c in 0..mask.cols {
        let (mut n, mut sum) = (0usize, 0.0);
        for r in 0..mask.rows {
            if !mask.is_valid(r, c) {
                continue;
            }
            covered[c] = true;
            if mask.get(r, c) {
                n += 1;
                sum += mask.grid.row_x(r);
            }
        }
        if n > 0 {
            present[c] = true;
            samples[c] = Some(StripeSample {
                center_mm: sum / n as f64,
                width_mm: n as f64 * pitch,
            });
        }
    }
    StripeProfile {
        present,
        samples,
        covered,
        mm_per_px: pitch,
        column_pitch_mm: pitch,
        y_origin_mm: mask.grid.y_min_mm,
    }
}

/// Window length in columns for a physical window: rounded, forced odd.
pub(crate) fn window_columns(window_mm: f64, pitch_mm: f64) -> usize {
    let k = ((window_mm / pitch_mm).round() as usize).max(1);
    if k.is_multiple_of(2) {
        k + 1
    } else {
        k
    }
}

/// Majority vote on presence and running mean on centre/width over a
/// physical window. Windows are clipped to the covered columns at the borders.
pub fn spatial_denoise(p: &StripeProfile, window_mm: f64) -> StripeProfile {
    assert!(window_mm > 0.0, "window_mm must be positive");
    let half = window_columns(window_mm, p.column_pitch_mm) / 2;
    let n = p.len();
    let mut out = p.clone();
    for c in 0..n {
        if !p.covered[c] {
            continue;
        }
        let lo = c.saturating_sub(half);
        let hi = (c + half + 1).min(n);
        let (mut members, mut votes) = (0usize, 0usize);
        let (mut k, mut center, mut width) = (0usize, 0.0, 0.0);
        for j in lo..hi {
            if !p.covered[j] {
                continue;
            }
            members += 1;
            if p.present[j] {
                votes += 1;
            }
            if let Some(s) = p.samples[j] {
                k += 1;
                center += s.center_mm;
                width += s.width_mm;
            }
        }
        let keep = 2 * votes > members;
        out.present[c] = keep;
        out.samples[c] = (keep && k > 0).then(|| StripeSample {
            center_mm: center / k as f64,
            width_mm: width / k as f64,
        });
    }
    out
}
