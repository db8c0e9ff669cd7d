use serde::{Deserialize, Serialize};

use super::{Mask, PipelineError};
use crate::geometry::Point;

/// Line `x cos(theta) + y sin(theta) = rho` in image pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoughLine {
    pub rho: f64,
    pub theta_deg: f64,
    pub votes: u32,
}

impl HoughLine {
    pub fn normal(&self) -> (f64, f64) {
        let t = self.theta_deg.to_radians();
        (t.cos(), t.sin())
    }

    /// Point on the line closest to `p`.
    pub fn project(&self, p: Point) -> Point {
        let (c, s) = self.normal();
        let d = p.x * c + p.y * s - self.rho;
        Point::new(p.x - d * c, p.y - d * s)
    }

    pub fn direction(&self) -> (f64, f64) {
        let (c, s) = self.normal();
        (-s, c)
    }
}

/// Accumulator-maximal line at 1 px × 1° resolution, `theta ∈ [0°, 180°)`.
/// Ties go to the smaller theta, then the smaller rho.
///
/// Votes use 16.16 fixed-point `cos`/`sin`, so `rho` is rounded to the nearest
/// pixel up to ~0.02 px of quantization on a full-HD frame.
pub fn hough_dominant_line(mask: &Mask) -> Result<HoughLine, PipelineError> {
    let mut xs: Vec<i64> = Vec::new();
    let mut ys: Vec<i64> = Vec::new();
    for (y, row) in mask.data.chunks_exact(mask.width.max(1)).enumerate() {
        for (x, &b) in row.iter().enumerate() {
            if b {
                xs.push(x as i64);
                ys.push(y as i64);
            }
        }
    }
    if xs.is_empty() {
        return Err(PipelineError::NoLine);
    }
    let diag = ((mask.width * mask.width + mask.height * mask.height) as f64).sqrt().ceil() as i64;
    let n_rho = (2 * diag + 1) as usize;
    const ONE: f64 = 65536.0;
    const HALF: i64 = 1 << 15;

    // Consecutive points often vote for the same bin; spreading them over
    // four partial rows keeps the increments independent.
    let mut acc = vec![0u32; 180 * n_rho];
    let mut partial = vec![0u32; 4 * n_rho];
    let offset = (diag << 16) + HALF;
    for theta in 0..180usize {
        let t = (theta as f64).to_radians();
        let (c, s) = ((t.cos() * ONE).round() as i64, (t.sin() * ONE).round() as i64);
        partial.fill(0);
        let (p0, rest) = partial.split_at_mut(n_rho);
        let (p1, rest) = rest.split_at_mut(n_rho);
        let (p2, p3) = rest.split_at_mut(n_rho);
        let bin = |k: usize| ((xs[k] * c + ys[k] * s + offset) >> 16) as usize;
        let quads = xs.len() / 4;
        for q in 0..quads {
            let k = 4 * q;
            p0[bin(k)] += 1;
            p1[bin(k + 1)] += 1;
            p2[bin(k + 2)] += 1;
            p3[bin(k + 3)] += 1;
        }
        for k in 4 * quads..xs.len() {
            p0[bin(k)] += 1;
        }
        let row = &mut acc[theta * n_rho..(theta + 1) * n_rho];
        for (i, r) in row.iter_mut().enumerate() {
            *r = p0[i] + p1[i] + p2[i] + p3[i];
        }
    }

    let mut best = (0u32, 0usize, 0usize);
    for theta in 0..180 {
        for r in 0..n_rho {
            let v = acc[theta * n_rho + r];
            if v > best.0 {
                best = (v, theta, r);
            }
        }
    }
    Ok(HoughLine {
        rho: best.2 as f64 - diag as f64,
        theta_deg: best.1 as f64,
        votes: best.0,
    })
}
