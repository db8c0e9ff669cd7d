//! Frame-to-event pipeline for the laser stripe.
//!
//! Stages, in order: HSV colour thresholding with morphological opening and a
//! Hough line fit, rectification of the mask onto the metric floor grid,
//! per-column profile extraction with spatial and temporal denoising, and the
//! continuity check. A second, unfiltered profile feeds displacement
//! measurement and the height solver.

mod continuity;
mod displacement;
mod hough;
mod hsv;
mod morph;
mod pipeline;
mod profile;
mod rectify;
mod temporal;

pub use continuity::{continuity_check, ContinuityReport, Gap};
pub use displacement::{
    estimate_heights, measure_displacement, Baseline, DisplacementMap, DisturbedColumn, ObjectHeight,
};
pub use hough::{hough_dominant_line, HoughLine};
pub use hsv::{
    hsv_pixel, percentile, rgb_to_hsv, rgb_to_hsv_region, threshold_stripe, threshold_stripe_adaptive, HsvImage,
    HsvThreshold, PixelRect,
};
pub use morph::{dilate, erode, morph_open};
pub use pipeline::{
    EventGap, EventHeight, FrameAnalysis, PerceptionEvent, PipelineConfig, StripeDetector,
};
pub use profile::{extract_profile, spatial_denoise, StripeProfile, StripeSample};
pub use rectify::{rectify_frame, rectify_mask, RectifiedImage, RectifiedMask, RectifyMap};
pub use temporal::{temporal_denoise, TemporalState};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("no stripe pixels: cannot fit a line")]
    NoLine,
    #[error("profile geometry does not match the temporal buffer")]
    GeometryMismatch,
    #[error("baseline profile required: run an empty-scene calibration pass first")]
    CalibrationRequired,
    #[error("frame is {got_w}x{got_h}, calibration expects {want_w}x{want_h}")]
    FrameSize {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unreadable frame: {0}")]
    InvalidFrame(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Binary image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }
}
