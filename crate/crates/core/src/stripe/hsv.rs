use serde::{Deserialize, Serialize};

use super::Mask;
use crate::Frame;

/// Per-pixel hue (degrees, `[0, 360)`), saturation and value (`[0, 1]`).
///
/// Only `region` is stored: the channel vectors are row-major over the region,
/// and [`HsvImage::at`] reads zeros elsewhere. `width`/`height` are the frame's.
#[derive(Clone, Debug, PartialEq)]
pub struct HsvImage {
    pub width: usize,
    pub height: usize,
    pub h: Vec<f32>,
    pub s: Vec<f32>,
    pub v: Vec<f32>,
    pub region: PixelRect,
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            x0: 0,
            y0: 0,
            x1: width,
            y1: height,
        }
    }

    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Clip to a `width × height` image.
    pub fn clipped(&self, width: usize, height: usize) -> Self {
        let x1 = self.x1.min(width);
        let y1 = self.y1.min(height);
        Self {
            x0: self.x0.min(x1),
            y0: self.y0.min(y1),
            x1,
            y1,
        }
    }
}

impl HsvImage {
    /// `(h, s, v)` at a frame pixel; zeros outside the region.
    pub fn at(&self, x: usize, y: usize) -> (f32, f32, f32) {
        let r = self.region;
        if !r.contains(x, y) {
            return (0.0, 0.0, 0.0);
        }
        let i = (y - r.y0) * r.width() + (x - r.x0);
        (self.h[i], self.s[i], self.v[i])
    }
}

/// Hexcone RGB → HSV for one pixel.
#[inline]
pub fn hsv_pixel(r: u8, g: u8, b: u8) -> (f32, f32, f32) {
    let (rf, gf, bf) = (r as f32, g as f32, b as f32);
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;
    let v = max / 255.0;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == rf {
        let h = 60.0 * ((gf - bf) / delta);
        if h < 0.0 {
            h + 360.0
        } else {
            h
        }
    } else if max == gf {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    (if h >= 360.0 { h - 360.0 } else { h }, s, v)
}

pub fn rgb_to_hsv(frame: &Frame) -> HsvImage {
    rgb_to_hsv_region(frame, PixelRect::full(frame.width(), frame.height()))
}

/// Convert only the pixels inside `region` (clipped to the frame).
pub fn rgb_to_hsv_region(frame: &Frame, region: PixelRect) -> HsvImage {
    let (w, hgt) = (frame.width(), frame.height());
    let region = region.clipped(w, hgt);
    let n = region.area();
    let (mut hs, mut ss, mut vs) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let data = frame.data();
    for y in region.y0..region.y1 {
        let row = &data[3 * (y * w + region.x0)..3 * (y * w + region.x1)];
        for px in row.chunks_exact(3) {
            let (h, s, v) = hsv_pixel(px[0], px[1], px[2]);
            hs.push(h);
            ss.push(s);
            vs.push(v);
        }
    }
    HsvImage {
        width: w,
        height: hgt,
        h: hs,
        s: ss,
        v: vs,
        region,
    }
}

/// Hue window (wraps through 0° when `hue_lo > hue_hi`) plus saturation and
/// value floors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsvThreshold {
    pub hue_lo: f32,
    pub hue_hi: f32,
    pub sat_min: f32,
    pub val_min: f32,
}

impl HsvThreshold {
    pub fn validate(&self) -> Result<(), String> {
        let deg = |h: f32| (0.0..=360.0).contains(&h);
        let unit = |x: f32| (0.0..=1.0).contains(&x);
        if !(deg(self.hue_lo) && deg(self.hue_hi) && unit(self.sat_min) && unit(self.val_min)) {
            return Err(format!("threshold out of domain: {self:?}"));
        }
        Ok(())
    }

    #[inline]
    pub fn hue_accepts(&self, h: f32) -> bool {
        if self.hue_lo <= self.hue_hi {
            h >= self.hue_lo && h <= self.hue_hi
        } else {
            h >= self.hue_lo || h <= self.hue_hi
        }
    }

    #[inline]
    pub fn accepts(&self, h: f32, s: f32, v: f32) -> bool {
        s >= self.sat_min && v >= self.val_min && self.hue_accepts(h)
    }

    /// Raise the saturation/value floors to the given percentiles of the
    /// distribution inside `hsv.region`. `None` keeps the fixed floor.
    pub fn adapted(&self, hsv: &HsvImage, sat_pct: Option<f32>, val_pct: Option<f32>) -> Self {
        let mut t = *self;
        if let Some(p) = sat_pct {
            t.sat_min = t.sat_min.max(percentile(&hsv.s, p));
        }
        if let Some(p) = val_pct {
            t.val_min = t.val_min.max(percentile(&hsv.v, p));
        }
        t
    }
}

#[inline]
fn unit_bin(v: f32) -> usize {
    (v.clamp(0.0, 1.0) * 255.0).round() as usize
}

fn histogram_percentile(hist: &[u32; 256], n: usize, pct: f32) -> f32 {
    if n == 0 {
        return 0.0;
    }
    let rank = ((pct.clamp(0.0, 100.0) / 100.0) * n as f32).ceil().max(1.0) as u32;
    let mut acc = 0u32;
    for (bin, &c) in hist.iter().enumerate() {
        acc += c;
        if acc >= rank {
            return bin as f32 / 255.0;
        }
    }
    1.0
}

/// Percentile (0–100) of unit-interval values, read off a 256-bin histogram
/// and quantized to multiples of 1/255.
pub fn percentile(values: &[f32], pct: f32) -> f32 {
    let mut hist = [0u32; 256];
    for &v in values {
        hist[unit_bin(v)] += 1;
    }
    histogram_percentile(&hist, values.len(), pct)
}

/// `threshold_stripe(&rgb_to_hsv_region(frame, region), &t.adapted(..))` in
/// two passes over the region, computing hue only for pixels that already
/// pass the saturation and value floors. Returns the mask and the adapted
/// threshold.
pub fn threshold_stripe_adaptive(
    frame: &Frame,
    region: PixelRect,
    t: &HsvThreshold,
    sat_pct: Option<f32>,
    val_pct: Option<f32>,
) -> (Mask, HsvThreshold) {
    let (w, hgt) = (frame.width(), frame.height());
    let region = region.clipped(w, hgt);
    let data = frame.data();
    let n = region.area();
    let mut sat = Vec::with_capacity(n);
    let mut val = Vec::with_capacity(n);
    let (mut s_hist, mut v_hist) = ([0u32; 256], [0u32; 256]);
    for y in region.y0..region.y1 {
        let row = &data[3 * (y * w + region.x0)..3 * (y * w + region.x1)];
        for px in row.chunks_exact(3) {
            let max = px[0].max(px[1]).max(px[2]);
            let min = px[0].min(px[1]).min(px[2]);
            let (maxf, delta) = (max as f32, (max - min) as f32);
            let s = if max > 0 { delta / maxf } else { 0.0 };
            let v = maxf / 255.0;
            s_hist[unit_bin(s)] += 1;
            v_hist[max as usize] += 1;
            sat.push(s);
            val.push(v);
        }
    }
    let mut t = *t;
    if let Some(p) = sat_pct {
        t.sat_min = t.sat_min.max(histogram_percentile(&s_hist, n, p));
    }
    if let Some(p) = val_pct {
        t.val_min = t.val_min.max(histogram_percentile(&v_hist, n, p));
    }
    let mut mask = Mask::new(w, hgt);
    let rw = region.width();
    for y in region.y0..region.y1 {
        let base = (y - region.y0) * rw;
        for k in 0..rw {
            let i = base + k;
            if sat[i] >= t.sat_min && val[i] >= t.val_min {
                let p = 3 * (y * w + region.x0 + k);
                let (h, _, _) = hsv_pixel(data[p], data[p + 1], data[p + 2]);
                mask.data[y * w + region.x0 + k] = t.hue_accepts(h);
            }
        }
    }
    (mask, t)
}

/// Binary stripe mask: true where the pixel passes `t`. Pixels outside the
/// converted region are false.
pub fn threshold_stripe(hsv: &HsvImage, t: &HsvThreshold) -> Mask {
    let mut mask = Mask::new(hsv.width, hsv.height);
    let r = hsv.region;
    let rw = r.width();
    for y in r.y0..r.y1 {
        let src = (y - r.y0) * rw;
        let dst = &mut mask.data[y * hsv.width + r.x0..y * hsv.width + r.x1];
        for (k, m) in dst.iter_mut().enumerate() {
            let i = src + k;
            *m = t.accepts(hsv.h[i], hsv.s[i], hsv.v[i]);
        }
    }
    mask
}
