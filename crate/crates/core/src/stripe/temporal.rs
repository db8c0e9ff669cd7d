use std::collections::VecDeque;

use super::profile::{StripeProfile, StripeSample};
use super::PipelineError;

/// Ring buffer of the most recent profiles for one camera.
///
/// Presence is voted over all `W` slots, with slots not yet filled counting as
/// present: a column goes absent once it has been absent in a strict majority
/// of the window, and comes back once the absent frames fall below that
/// majority. With `W = 3` both directions need two frames, so the verdict for
/// a change seen at frame `k` is emitted at frame `k + 1` and the output lags
/// the newest frame by up to two inter-frame periods (40 ms at 50 FPS).
#[derive(Clone, Debug)]
pub struct TemporalState {
    window: usize,
    buffer: VecDeque<StripeProfile>,
    frames_seen: u64,
}

impl TemporalState {
    pub fn new(window: usize) -> Result<Self, PipelineError> {
        if window == 0 {
            return Err(PipelineError::Config("temporal window must be at least 1 frame".into()));
        }
        Ok(Self {
            window,
            buffer: VecDeque::with_capacity(window),
            frames_seen: 0,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
    }
}

impl Default for TemporalState {
    fn default() -> Self {
        Self::new(3).expect("nonzero window")
    }
}

/// Push `p` and return the voted profile. Centre and width are averaged over
/// the buffered frames in which the column was present.
pub fn temporal_denoise(state: &mut TemporalState, p: &StripeProfile) -> Result<StripeProfile, PipelineError> {
    if let Some(first) = state.buffer.front() {
        if !first.same_geometry(p) {
            return Err(PipelineError::GeometryMismatch);
        }
    }
    if state.buffer.len() == state.window {
        state.buffer.pop_front();
    }
    state.buffer.push_back(p.clone());
    state.frames_seen += 1;

    let mut out = p.clone();
    for c in 0..p.len() {
        let mut absent = 0usize;
        let (mut k, mut center, mut width) = (0usize, 0.0, 0.0);
        for q in &state.buffer {
            if !q.present[c] {
                absent += 1;
            }
            if let Some(s) = q.samples[c] {
                k += 1;
                center += s.center_mm;
                width += s.width_mm;
            }
        }
        let keep = 2 * absent <= state.window;
        out.present[c] = keep;
        out.samples[c] = (keep && k > 0).then(|| StripeSample {
            center_mm: center / k as f64,
            width_mm: width / k as f64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::profile::tests::profile_from;
    use super::*;

    fn with_gap(gap: bool) -> StripeProfile {
        let mut present = vec![true; 30];
        if gap {
            for b in &mut present[10..20] {
                *b = false;
            }
        }
        profile_from(&present)
    }

    #[test]
    fn identical_frames_pass_through() {
        let mut st = TemporalState::default();
        let p = with_gap(true);
        let mut out = None;
        for _ in 0..3 {
            out = Some(temporal_denoise(&mut st, &p).unwrap());
        }
        assert_eq!(out.unwrap(), p);
        assert_eq!(st.len(), 3);
        assert_eq!(st.frames_seen(), 3);
    }

    #[test]
    fn one_of_three_is_suppressed() {
        let mut st = TemporalState::default();
        for gap in [false, false, true] {
            let out = temporal_denoise(&mut st, &with_gap(gap)).unwrap();
            assert!(out.present.iter().all(|&b| b));
        }
    }

    #[test]
    fn two_of_three_is_reported() {
        let mut st = TemporalState::default();
        let mut out = None;
        for gap in [false, true, true] {
            out = Some(temporal_denoise(&mut st, &with_gap(gap)).unwrap());
        }
        assert!(!out.unwrap().present[15]);
    }

    #[test]
    fn buffer_never_exceeds_window() {
        let mut st = TemporalState::new(3).unwrap();
        for i in 0..10 {
            temporal_denoise(&mut st, &with_gap(i % 2 == 0)).unwrap();
            assert!(st.len() <= 3);
        }
    }

    #[test]
    fn geometry_mismatch_is_an_error() {
        let mut st = TemporalState::default();
        temporal_denoise(&mut st, &with_gap(false)).unwrap();
        let other = profile_from(&[true; 12]);
        assert_eq!(temporal_denoise(&mut st, &other), Err(PipelineError::GeometryMismatch));
    }

    #[test]
    fn zero_window_rejected() {
        assert!(TemporalState::new(0).is_err());
    }
}
