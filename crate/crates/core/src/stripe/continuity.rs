use serde::{Deserialize, Serialize};

use super::profile::StripeProfile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub start_mm: f64,
    pub end_mm: f64,
    pub length_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// Sorted, non-overlapping.
    pub gaps: Vec<Gap>,
    pub max_gap_mm: f64,
    pub triggered: bool,
    /// Set when no covered column shows the stripe at all.
    pub no_stripe: bool,
    pub timestamp_ms: u64,
}

/// Maximal runs of absent covered columns, in mm. Uncovered columns end a run
/// without contributing to it. A profile with no stripe anywhere is reported
/// as one gap spanning the whole covered extent and always triggers.
pub fn continuity_check(p: &StripeProfile, gap_threshold_mm: f64, timestamp_ms: u64) -> ContinuityReport {
    assert!(gap_threshold_mm > 0.0, "gap threshold must be positive");
    let mut gaps = Vec::new();
    let mut run: Option<usize> = None;
    let close = |start: usize, end: usize, gaps: &mut Vec<Gap>| {
        let start_mm = p.column_start_mm(start);
        let end_mm = p.column_start_mm(end);
        gaps.push(Gap {
            start_mm,
            end_mm,
            length_mm: (end - start) as f64 * p.column_pitch_mm,
        });
    };
    for c in 0..p.len() {
        let absent = p.covered[c] && !p.present[c];
        match (absent, run) {
            (true, None) => run = Some(c),
            (false, Some(s)) => {
                close(s, c, &mut gaps);
                run = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run {
        close(s, p.len(), &mut gaps);
    }

    if p.present_count() == 0 {
        let first = p.covered.iter().position(|&c| c);
        let last = p.covered.iter().rposition(|&c| c);
        let gap = match (first, last) {
            (Some(a), Some(b)) => Gap {
                start_mm: p.column_start_mm(a),
                end_mm: p.column_start_mm(b + 1),
                length_mm: (b + 1 - a) as f64 * p.column_pitch_mm,
            },
            _ => Gap {
                start_mm: p.column_start_mm(0),
                end_mm: p.column_start_mm(p.len()),
                length_mm: p.len() as f64 * p.column_pitch_mm,
            },
        };
        return ContinuityReport {
            max_gap_mm: gap.length_mm,
            gaps: vec![gap],
            triggered: true,
            no_stripe: true,
            timestamp_ms,
        };
    }

    let max_gap_mm = gaps.iter().map(|g| g.length_mm).fold(0.0, f64::max);
    ContinuityReport {
        triggered: max_gap_mm > gap_threshold_mm,
        gaps,
        max_gap_mm,
        no_stripe: false,
        timestamp_ms,
    }
}
