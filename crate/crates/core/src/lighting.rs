//! The five global lighting presets shared by the simulator and the dataset
//! compositor.
//!
//! Each preset is a gain/offset pair plus one linear directional gradient over
//! the image plane:
//!
//! ```text
//! out = clamp(in * gain * (1 + strength * s) + offset)
//! s   = ((u - cu) cos a - (v - cv) sin a) / half_diagonal   in [-1, 1]
//! ```
//!
//! with the angle `a` measured counter-clockwise from the image +x axis
//! (image rows grow downward, so 45° points up and to the right).
//!
//! | mode      | gain | offset | strength | angle |
//! |-----------|------|--------|----------|-------|
//! | regular   | 1.00 | 0      | 0.00     | –     |
//! | reduced   | 0.55 | 0      | 0.00     | –     |
//! | dir225    | 1.00 | 0      | 0.40     | 225°  |
//! | dir45     | 1.00 | 0      | 0.40     | 45°   |
//! | harsh     | 1.40 | 10     | 0.30     | 90°   |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightingMode {
    Regular,
    Reduced,
    Dir225,
    Dir45,
    Harsh,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightingParams {
    pub gain: f32,
    pub offset: f32,
    pub strength: f32,
    pub angle_deg: f32,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown lighting mode {0:?} (expected regular, reduced, dir225, dir45 or harsh)")]
pub struct UnknownLightingMode(pub String);

impl LightingMode {
    pub const ALL: [LightingMode; 5] = [
        LightingMode::Regular,
        LightingMode::Reduced,
        LightingMode::Dir225,
        LightingMode::Dir45,
        LightingMode::Harsh,
    ];

    pub fn params(self) -> LightingParams {
        let p = |gain, offset, strength, angle_deg| LightingParams {
            gain,
            offset,
            strength,
            angle_deg,
        };
        match self {
            LightingMode::Regular => p(1.0, 0.0, 0.0, 0.0),
            LightingMode::Reduced => p(0.55, 0.0, 0.0, 0.0),
            LightingMode::Dir225 => p(1.0, 0.0, 0.4, 225.0),
            LightingMode::Dir45 => p(1.0, 0.0, 0.4, 45.0),
            LightingMode::Harsh => p(1.4, 10.0, 0.3, 90.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LightingMode::Regular => "regular",
            LightingMode::Reduced => "reduced",
            LightingMode::Dir225 => "dir225",
            LightingMode::Dir45 => "dir45",
            LightingMode::Harsh => "harsh",
        }
    }
}

impl fmt::Display for LightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LightingMode {
    type Err = UnknownLightingMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().trim_end_matches('°') {
            "regular" => Ok(LightingMode::Regular),
            "reduced" => Ok(LightingMode::Reduced),
            "dir225" | "225" => Ok(LightingMode::Dir225),
            "dir45" | "45" => Ok(LightingMode::Dir45),
            "harsh" => Ok(LightingMode::Harsh),
            _ => Err(UnknownLightingMode(s.to_string())),
        }
    }
}

/// Per-pixel gain field for one image size.
#[derive(Clone, Debug)]
pub struct GainField {
    width: usize,
    params: LightingParams,
    dir: (f32, f32),
    centre: (f32, f32),
    inv_half_diag: f32,
}

impl GainField {
    pub fn new(mode: LightingMode, width: usize, height: usize) -> Self {
        let params = mode.params();
        let a = params.angle_deg.to_radians();
        let half_diag = 0.5 * ((width * width + height * height) as f32).sqrt();
        Self {
            width,
            params,
            dir: (a.cos(), a.sin()),
            centre: ((width as f32 - 1.0) * 0.5, (height as f32 - 1.0) * 0.5),
            inv_half_diag: 1.0 / half_diag.max(1.0),
        }
    }

    #[inline]
    pub fn gain(&self, u: usize, v: usize) -> f32 {
        let s = ((u as f32 - self.centre.0) * self.dir.0 - (v as f32 - self.centre.1) * self.dir.1)
            * self.inv_half_diag;
        self.params.gain * (1.0 + self.params.strength * s)
    }

    #[inline]
    pub fn offset(&self) -> f32 {
        self.params.offset
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// Apply a preset in place to a row-major RGB buffer.
pub fn apply_lighting(rgb: &mut [u8], width: usize, height: usize, mode: LightingMode) {
    assert_eq!(rgb.len(), width * height * 3, "RGB buffer size mismatch");
    if mode == LightingMode::Regular {
        return;
    }
    let field = GainField::new(mode, width, height);
    for (i, px) in rgb.chunks_exact_mut(3).enumerate() {
        let g = field.gain(i % width, i / width);
        for c in px {
            *c = (*c as f32 * g + field.offset()).round().clamp(0.0, 255.0) as u8;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, level: u8) -> Vec<u8> {
        vec![level; w * h * 3]
    }

    #[test]
    fn regular_is_identity() {
        let mut img: Vec<u8> = (0..(40 * 30 * 3)).map(|i| (i * 7 % 256) as u8).collect();
        let orig = img.clone();
        apply_lighting(&mut img, 40, 30, LightingMode::Regular);
        assert_eq!(img, orig);
    }

    #[test]
    fn reduced_darkens() {
        let mut img = gray(64, 48, 150);
        apply_lighting(&mut img, 64, 48, LightingMode::Reduced);
        let mean = img.iter().map(|&v| v as f64).sum::<f64>() / img.len() as f64;
        assert!(mean < 150.0);
    }

    /// Least-squares plane I = a + b u + c v over the lit image; the gradient
    /// direction is atan2(-c, b) in the y-up convention.
    fn gradient_angle(img: &[u8], w: usize, h: usize) -> f64 {
        let (mut su, mut sv, mut si, mut suu, mut svv, mut suv, mut sui, mut svi) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let n = (w * h) as f64;
        for v in 0..h {
            for u in 0..w {
                let i = img[(v * w + u) * 3] as f64;
                let (uf, vf) = (u as f64, v as f64);
                su += uf;
                sv += vf;
                si += i;
                suu += uf * uf;
                svv += vf * vf;
                suv += uf * vf;
                sui += uf * i;
                svi += vf * i;
            }
        }
        let m = nalgebra::Matrix3::new(n, su, sv, su, suu, suv, sv, suv, svv);
        let rhs = nalgebra::Vector3::new(si, sui, svi);
        let x = m.lu().solve(&rhs).unwrap();
        (-x[2]).atan2(x[1]).to_degrees()
    }

    #[test]
    fn directional_modes_point_their_way() {
        let (w, h) = (160, 120);
        let mut img = gray(w, h, 128);
        apply_lighting(&mut img, w, h, LightingMode::Dir45);
        let a = gradient_angle(&img, w, h);
        assert!((a - 45.0).abs() <= 1.0, "{a}");

        let mut img = gray(w, h, 128);
        apply_lighting(&mut img, w, h, LightingMode::Dir225);
        let a = gradient_angle(&img, w, h).rem_euclid(360.0);
        assert!((a - 225.0).abs() <= 1.0, "{a}");
    }

    #[test]
    fn parse_modes() {
        assert_eq!("45°".parse::<LightingMode>().unwrap(), LightingMode::Dir45);
        assert_eq!("Harsh".parse::<LightingMode>().unwrap(), LightingMode::Harsh);
        assert!("disco".parse::<LightingMode>().is_err());
        for m in LightingMode::ALL {
            assert_eq!(m.name().parse::<LightingMode>().unwrap(), m);
        }
    }
}
