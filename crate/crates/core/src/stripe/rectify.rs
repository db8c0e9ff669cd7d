use super::{hsv::PixelRect, Mask};
use crate::geometry::{FloorGrid, Homography, Point};
use crate::Frame;

const INVALID: u32 = u32::MAX;

/// Inverse-mapping lookup from floor-grid cells to source pixels, built once
/// per calibration.
#[derive(Clone, Debug)]
pub struct RectifyMap {
    grid: FloorGrid,
    rows: usize,
    cols: usize,
    image_width: usize,
    image_height: usize,
    /// Nearest source pixel index per cell, `INVALID` outside the image.
    nearest: Vec<u32>,
    /// Sub-pixel source coordinates per cell (NaN outside the image).
    coords: Vec<(f32, f32)>,
    support: Option<PixelRect>,
}

impl RectifyMap {
    /// `pixel_to_floor` maps image pixels to floor millimetres.
    pub fn new(pixel_to_floor: &Homography, grid: FloorGrid, image_width: usize, image_height: usize) -> Self {
        let floor_to_pixel = pixel_to_floor.inverse();
        let (rows, cols) = (grid.rows(), grid.cols());
        let mut nearest = vec![INVALID; rows * cols];
        let mut coords = vec![(f32::NAN, f32::NAN); rows * cols];
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
        for r in 0..rows {
            for c in 0..cols {
                let floor = Point::new(grid.row_x(r), grid.col_y(c));
                let Ok(p) = floor_to_pixel.apply(floor) else {
                    continue;
                };
                let (u, v) = (p.x.round(), p.y.round());
                if u < 0.0 || v < 0.0 || u >= image_width as f64 || v >= image_height as f64 {
                    continue;
                }
                let (u, v) = (u as usize, v as usize);
                let k = r * cols + c;
                nearest[k] = (v * image_width + u) as u32;
                coords[k] = (p.x as f32, p.y as f32);
                x0 = x0.min(u);
                y0 = y0.min(v);
                x1 = x1.max(u + 1);
                y1 = y1.max(v + 1);
            }
        }
        let support = (x0 < x1).then_some(PixelRect { x0, y0, x1, y1 });
        Self {
            grid,
            rows,
            cols,
            image_width,
            image_height,
            nearest,
            coords,
            support,
        }
    }

    pub fn grid(&self) -> &FloorGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.image_width, self.image_height)
    }

    /// Bounding box of every sampled pixel, grown by `margin` and clipped to
    /// the image. `None` when no cell lands in the image.
    pub fn support(&self, margin: usize) -> Option<PixelRect> {
        self.support.map(|r| PixelRect {
            x0: r.x0.saturating_sub(margin),
            y0: r.y0.saturating_sub(margin),
            x1: (r.x1 + margin).min(self.image_width),
            y1: (r.y1 + margin).min(self.image_height),
        })
    }

    pub fn valid_cells(&self) -> usize {
        self.nearest.iter().filter(|&&i| i != INVALID).count()
    }
}

/// Nearest-neighbour rectified mask. Cells without image support are
/// invalid, never silently false.
#[derive(Clone, Debug, PartialEq)]
pub struct RectifiedMask {
    pub grid: FloorGrid,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
    pub valid: Vec<bool>,
}

impl RectifiedMask {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.cols + col]
    }

    /// Floor coordinate (x outward, y along the edge) of a cell centre.
    pub fn cell_mm(&self, row: usize, col: usize) -> (f64, f64) {
        (self.grid.row_x(row), self.grid.col_y(col))
    }
}

pub fn rectify_mask(mask: &Mask, map: &RectifyMap) -> RectifiedMask {
    assert_eq!(
        (mask.width, mask.height),
        (map.image_width, map.image_height),
        "mask size differs from the rectification map"
    );
    let mut cells = vec![false; map.nearest.len()];
    let mut valid = vec![false; map.nearest.len()];
    for (k, &src) in map.nearest.iter().enumerate() {
        if src != INVALID {
            valid[k] = true;
            cells[k] = mask.data[src as usize];
        }
    }
    RectifiedMask {
        grid: map.grid,
        rows: map.rows,
        cols: map.cols,
        cells,
        valid,
    }
}

/// Bilinear luminance resample of a frame onto the floor grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RectifiedImage {
    pub grid: FloorGrid,
    pub rows: usize,
    pub cols: usize,
    /// NaN where the cell has no image support.
    pub values: Vec<f32>,
}

pub fn rectify_frame(frame: &Frame, map: &RectifyMap) -> RectifiedImage {
    let (w, h) = (frame.width(), frame.height());
    let luma = |x: usize, y: usize| {
        let [r, g, b] = frame.pixel(x, y);
        0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32
    };
    let values = map
        .coords
        .iter()
        .map(|&(u, v)| {
            if u.is_nan() {
                return f32::NAN;
            }
            let u = u.clamp(0.0, (w - 1) as f32);
            let v = v.clamp(0.0, (h - 1) as f32);
            let (x0, y0) = (u.floor() as usize, v.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (u - x0 as f32, v - y0 as f32);
            let top = luma(x0, y0) * (1.0 - fx) + luma(x1, y0) * fx;
            let bot = luma(x0, y1) * (1.0 - fx) + luma(x1, y1) * fx;
            top * (1.0 - fy) + bot * fy
        })
        .collect();
    RectifiedImage {
        grid: map.grid,
        rows: map.rows,
        cols: map.cols,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Identity "calibration": one grid cell per pixel, x along image rows.
    fn identity_setup(w: usize, h: usize) -> (Homography, FloorGrid) {
        // floor (x, y) = (v, u): rows outward, columns along the edge.
        let swap = Homography::from_rows([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let grid = FloorGrid {
            x_min_mm: -0.5,
            x_max_mm: h as f64 - 0.5,
            y_min_mm: -0.5,
            y_max_mm: w as f64 - 0.5,
            cell_mm: 1.0,
        };
        (swap, grid)
    }

    #[test]
    fn identity_resamples_unchanged() {
        let (w, h) = (17, 11);
        let (hom, grid) = identity_setup(w, h);
        let map = RectifyMap::new(&hom, grid, w, h);
        let mut m = Mask::new(w, h);
        for (i, b) in m.data.iter_mut().enumerate() {
            *b = i % 3 == 0;
        }
        let r = rectify_mask(&m, &map);
        assert!(r.valid.iter().all(|&v| v));
        for y in 0..h {
            for x in 0..w {
                assert_eq!(r.get(y, x), m.get(x, y));
            }
        }
        let f = Frame::filled(w, h, [100, 100, 100]);
        let img = rectify_frame(&f, &map);
        assert!(img.values.iter().all(|v| (v - 100.0).abs() < 1e-3));
    }

    #[test]
    fn outside_support_is_invalid() {
        let (w, h) = (10, 10);
        let (hom, mut grid) = identity_setup(w, h);
        grid.y_max_mm += 5.0;
        let map = RectifyMap::new(&hom, grid, w, h);
        let r = rectify_mask(&Mask::new(w, h), &map);
        assert!(!r.is_valid(0, 12));
        assert!(r.is_valid(0, 9));
        let img = rectify_frame(&Frame::filled(w, h, [1, 2, 3]), &map);
        assert!(img.values[12].is_nan());
    }
}
