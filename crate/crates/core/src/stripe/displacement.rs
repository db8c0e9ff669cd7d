use serde::{Deserialize, Serialize};

use super::profile::StripeProfile;
use super::rectify::RectifiedMask;
use super::PipelineError;
use crate::geometry::{height_from_parallax, parallax_angle, CameraIntrinsics, RigGeometry, StripeObservation};

/// Floor-stripe reference from an empty-scene calibration pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    /// Mean centre per column; `None` where the stripe was never seen.
    pub centers_mm: Vec<Option<f64>>,
    pub widths_mm: Vec<Option<f64>>,
    /// Pooled per-column standard deviation of the centre.
    pub std_mm: f64,
    pub column_pitch_mm: f64,
    pub y_origin_mm: f64,
}

impl Baseline {
    /// Average one or more empty-scene profiles.
    pub fn from_profiles(profiles: &[StripeProfile]) -> Result<Self, PipelineError> {
        let first = profiles.first().ok_or(PipelineError::CalibrationRequired)?;
        if profiles.iter().any(|p| !p.same_geometry(first)) {
            return Err(PipelineError::GeometryMismatch);
        }
        let n = first.len();
        let mut centers_mm = vec![None; n];
        let mut widths_mm = vec![None; n];
        let (mut ss, mut dof) = (0.0, 0usize);
        for c in 0..n {
            let samples: Vec<_> = profiles.iter().filter_map(|p| p.samples[c]).collect();
            if samples.is_empty() {
                continue;
            }
            let k = samples.len() as f64;
            let mean = samples.iter().map(|s| s.center_mm).sum::<f64>() / k;
            ss += samples.iter().map(|s| (s.center_mm - mean).powi(2)).sum::<f64>();
            dof += samples.len() - 1;
            centers_mm[c] = Some(mean);
            widths_mm[c] = Some(samples.iter().map(|s| s.width_mm).sum::<f64>() / k);
        }
        if centers_mm.iter().all(Option::is_none) {
            return Err(PipelineError::NoLine);
        }
        Ok(Self {
            centers_mm,
            widths_mm,
            std_mm: if dof > 0 { (ss / dof as f64).sqrt() } else { 0.0 },
            column_pitch_mm: first.column_pitch_mm,
            y_origin_mm: first.y_origin_mm,
        })
    }

    /// `max(factor·std, min_mm)`.
    pub fn noise_floor(&self, factor: f64, min_mm: f64) -> f64 {
        (factor * self.std_mm).max(min_mm)
    }

    pub fn len(&self) -> usize {
        self.centers_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers_mm.is_empty()
    }

    fn matches(&self, p: &StripeProfile) -> bool {
        self.len() == p.len() && self.column_pitch_mm == p.column_pitch_mm && self.y_origin_mm == p.y_origin_mm
    }

    /// Copy of `mask` with the cells on the baseline floor stripe (within half
    /// its width plus `noise_floor_mm` of the centre) cleared. A column that
    /// shows both the floor stripe and an elevated segment then measures
    /// only the elevated one.
    pub fn remove_floor_stripe(&self, mask: &RectifiedMask, noise_floor_mm: f64) -> RectifiedMask {
        let mut out = mask.clone();
        for c in 0..mask.cols.min(self.len()) {
            let (Some(center), Some(width)) = (self.centers_mm[c], self.widths_mm[c]) else {
                continue;
            };
            let reach = 0.5 * width + noise_floor_mm;
            for r in 0..mask.rows {
                if (mask.grid.row_x(r) - center).abs() <= reach {
                    out.cells[r * mask.cols + c] = false;
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbedColumn {
    pub col: usize,
    pub pos_mm: f64,
    /// Baseline minus observed centre, mm (positive = shifted toward the AMR).
    pub displacement_mm: f64,
    pub observed_center_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementMap {
    /// Per column where both baseline and observation exist.
    pub displacement_mm: Vec<Option<f64>>,
    pub disturbed: Vec<DisturbedColumn>,
    /// Columns where the baseline saw the stripe and the observation does not.
    pub absent_columns: Vec<usize>,
    pub noise_floor_mm: f64,
}

/// Per-column displacement against the baseline; columns moving by more than
/// `noise_floor_mm` form the disturbed set.
#[allow(clippy::needless_range_loop)] // indexes baseline, profile and output together
pub fn measure_displacement(
    baseline: Option<&Baseline>,
    observed: &StripeProfile,
    noise_floor_mm: f64,
) -> Result<DisplacementMap, PipelineError> {
    let baseline = baseline.ok_or(PipelineError::CalibrationRequired)?;
    if !baseline.matches(observed) {
        return Err(PipelineError::GeometryMismatch);
    }
    let mut displacement_mm = vec![None; observed.len()];
    let mut disturbed = Vec::new();
    let mut absent_columns = Vec::new();
    for c in 0..observed.len() {
        let Some(base) = baseline.centers_mm[c] else {
            continue;
        };
        match observed.samples[c] {
            Some(s) => {
                let d = base - s.center_mm;
                displacement_mm[c] = Some(d);
                if d.abs() > noise_floor_mm {
                    disturbed.push(DisturbedColumn {
                        col: c,
                        pos_mm: observed.column_center_mm(c),
                        displacement_mm: d,
                        observed_center_mm: s.center_mm,
                    });
                }
            }
            None => absent_columns.push(c),
        }
    }
    Ok(DisplacementMap {
        displacement_mm,
        disturbed,
        absent_columns,
        noise_floor_mm,
    })
}

/// Height of one contiguous disturbed run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectHeight {
    pub pos_mm: f64,
    pub start_mm: f64,
    pub end_mm: f64,
    /// Median of the per-column solutions.
    pub h_obj_mm: f64,
    pub columns: usize,
    pub valid: bool,
}

/// Group disturbed columns into runs (bridging holes of up to `max_hole`
/// columns, dropping runs shorter than `min_columns`) and solve each column
/// for height.
///
/// Observed centres are apparent floor positions on the rectified grid,
/// which correspond to a camera looking straight down from `rig.h_cam`.
pub fn estimate_heights(
    map: &DisplacementMap,
    rig: &RigGeometry,
    intr: &CameraIntrinsics,
    min_columns: usize,
    max_hole: usize,
) -> Vec<ObjectHeight> {
    let mut runs: Vec<Vec<DisturbedColumn>> = Vec::new();
    for &d in &map.disturbed {
        match runs.last_mut() {
            Some(run) if d.col - run.last().unwrap().col <= max_hole + 1 => run.push(d),
            _ => runs.push(vec![d]),
        }
    }
    runs.into_iter()
        .filter(|run| run.len() >= min_columns.max(1))
        .map(|run| {
            let mut heights = Vec::with_capacity(run.len());
            let mut valid = 0usize;
            for d in &run {
                let obs = StripeObservation::from_rectified(d.observed_center_mm, rig, intr);
                let est = parallax_angle(obs, intr).and_then(|phi| height_from_parallax(phi, rig));
                if let Ok(e) = est {
                    heights.push(e.h_obj);
                    valid += e.valid as usize;
                }
            }
            let pitch = map_pitch(&run);
            let start_mm = run[0].pos_mm - 0.5 * pitch;
            let end_mm = run[run.len() - 1].pos_mm + 0.5 * pitch;
            let h_obj_mm = median(&mut heights).unwrap_or(f64::NAN);
            ObjectHeight {
                pos_mm: 0.5 * (start_mm + end_mm),
                start_mm,
                end_mm,
                h_obj_mm,
                columns: run.len(),
                valid: h_obj_mm.is_finite() && 2 * valid > run.len() && h_obj_mm > 0.0 && h_obj_mm < rig.height_limit(),
            }
        })
        .collect()
}

fn map_pitch(run: &[DisturbedColumn]) -> f64 {
    match run {
        [a, .., b] if b.col > a.col => (b.pos_mm - a.pos_mm) / (b.col - a.col) as f64,
        _ => 1.0,
    }
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[cfg(test)]
mod tests {
    use super::super::profile::tests::profile_from;
    use super::super::profile::StripeSample;
    use super::*;
    use crate::geometry::forward_parallax;

    fn floor_profile(n: usize) -> StripeProfile {
        profile_from(&vec![true; n])
    }

    #[test]
    fn identical_observation_has_zero_displacement() {
        let p = floor_profile(40);
        let b = Baseline::from_profiles(std::slice::from_ref(&p)).unwrap();
        let m = measure_displacement(Some(&b), &p, 1.5).unwrap();
        assert!(m.displacement_mm.iter().all(|d| *d == Some(0.0)));
        assert!(m.disturbed.is_empty());
        assert!(m.absent_columns.is_empty());
    }

    #[test]
    fn missing_baseline_requires_calibration() {
        let p = floor_profile(10);
        assert_eq!(
            measure_displacement(None, &p, 1.5),
            Err(PipelineError::CalibrationRequired)
        );
    }

    #[test]
    fn pooled_std_and_noise_floor() {
        let mut a = floor_profile(4);
        let mut b = floor_profile(4);
        for c in 0..4 {
            a.samples[c].as_mut().unwrap().center_mm = 299.0;
            b.samples[c].as_mut().unwrap().center_mm = 301.0;
        }
        let base = Baseline::from_profiles(&[a, b]).unwrap();
        assert_eq!(base.centers_mm[0], Some(300.0));
        // Each column: ss = 2, one degree of freedom.
        assert!((base.std_mm - 2f64.sqrt()).abs() < 1e-12);
        assert!((base.noise_floor(2.0, 1.5) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(Baseline::from_profiles(&[floor_profile(3)]).unwrap().noise_floor(2.0, 1.5), 1.5);
    }

    #[test]
    fn occluded_columns_are_excluded_and_counted() {
        let p = floor_profile(20);
        let b = Baseline::from_profiles(&[p]).unwrap();
        let mut present = vec![true; 20];
        present[5..9].fill(false);
        let m = measure_displacement(Some(&b), &profile_from(&present), 1.5).unwrap();
        assert_eq!(m.absent_columns, vec![5, 6, 7, 8]);
        assert!(m.disturbed.is_empty());
    }

    #[test]
    fn box_top_recovers_height() {
        let rig = RigGeometry::default();
        let intr = CameraIntrinsics::half_resolution();
        let h = 100.0;
        // Apparent floor position of the stripe on the box top for a nadir
        // camera: h_cam · tanφ1.
        let u = rig.h_cam * forward_parallax(h, &rig).unwrap().tan();
        let base = Baseline::from_profiles(&[floor_profile(60)]).unwrap();
        let mut obs = floor_profile(60);
        for c in 20..40 {
            obs.samples[c] = Some(StripeSample {
                center_mm: u,
                width_mm: 3.0,
            });
        }
        let m = measure_displacement(Some(&base), &obs, 1.5).unwrap();
        assert_eq!(m.disturbed.len(), 20);
        let hs = estimate_heights(&m, &rig, &intr, 3, 2);
        assert_eq!(hs.len(), 1);
        assert!((hs[0].h_obj_mm - h).abs() < 1e-9, "{:?}", hs[0]);
        assert!(hs[0].valid);
        assert_eq!((hs[0].start_mm, hs[0].end_mm), (20.0, 40.0));
    }

    #[test]
    fn runs_split_on_wide_holes_and_drop_short_runs() {
        let rig = RigGeometry::default();
        let intr = CameraIntrinsics::half_resolution();
        let base = Baseline::from_profiles(&[floor_profile(60)]).unwrap();
        let mut obs = floor_profile(60);
        for c in (5..15).chain(17..20).chain(30..32) {
            obs.samples[c].as_mut().unwrap().center_mm = 250.0;
        }
        let m = measure_displacement(Some(&base), &obs, 1.5).unwrap();
        let hs = estimate_heights(&m, &rig, &intr, 3, 2);
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].columns, 13);
    }
}
