use super::Mask;

/// Binary dilation of a row-major `w × h` grid by a `(2r+1)²` square, windows
/// clipped at the borders. Separable; small radii OR shifted rows directly so
/// the inner loops vectorize.
fn dilate_raw(src: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let mut rows = vec![false; w * h];
    for y in 0..h {
        let s = &src[y * w..(y + 1) * w];
        let d = &mut rows[y * w..(y + 1) * w];
        if r <= 8 {
            d.copy_from_slice(s);
            for k in 1..=r.min(w.saturating_sub(1)) {
                for x in 0..w - k {
                    d[x] |= s[x + k];
                }
                for x in k..w {
                    d[x] |= s[x - k];
                }
            }
        } else {
            let mut prefix = vec![0u32; w + 1];
            for x in 0..w {
                prefix[x + 1] = prefix[x] + s[x] as u32;
            }
            for x in 0..w {
                d[x] = prefix[(x + r + 1).min(w)] > prefix[x.saturating_sub(r)];
            }
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r + 1).min(h);
        let dst = &mut out[y * w..(y + 1) * w];
        for yy in lo..hi {
            let row = &rows[yy * w..(yy + 1) * w];
            for (o, &b) in dst.iter_mut().zip(row) {
                *o |= b;
            }
        }
    }
    out
}

fn invert(v: &mut [bool]) {
    for b in v {
        *b = !*b;
    }
}

fn erode_raw(src: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let mut inv = src.to_vec();
    invert(&mut inv);
    let mut out = dilate_raw(&inv, w, h, r);
    invert(&mut out);
    out
}

pub fn erode(mask: &Mask, radius: usize) -> Mask {
    Mask {
        width: mask.width,
        height: mask.height,
        data: erode_raw(&mask.data, mask.width, mask.height, radius),
    }
}

pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    Mask {
        width: mask.width,
        height: mask.height,
        data: dilate_raw(&mask.data, mask.width, mask.height, radius),
    }
}

/// Bounding box `(x0, y0, x1, y1)` of the true pixels, half-open.
fn true_bounds(mask: &Mask) -> Option<(usize, usize, usize, usize)> {
    let w = mask.width;
    let mut b: Option<(usize, usize, usize, usize)> = None;
    for (y, row) in mask.data.chunks_exact(w).enumerate() {
        let Some(first) = row.iter().position(|&v| v) else {
            continue;
        };
        let last = row.iter().rposition(|&v| v).unwrap();
        b = Some(match b {
            None => (first, y, last + 1, y + 1),
            Some((x0, y0, x1, _)) => (x0.min(first), y0, x1.max(last + 1), y + 1),
        });
    }
    b
}

/// Erosion followed by dilation with a square element of side `2r + 1`.
///
/// Only the bounding box of the true pixels, grown by `r`, is processed:
/// erosion is false everywhere else, and the margin keeps clipped windows
/// at the crop edge from differing from the full-image result.
pub fn morph_open(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 || mask.data.is_empty() {
        return mask.clone();
    }
    let Some((x0, y0, x1, y1)) = true_bounds(mask) else {
        return mask.clone();
    };
    let (w, h) = (mask.width, mask.height);
    let (cx0, cy0) = (x0.saturating_sub(radius), y0.saturating_sub(radius));
    let (cx1, cy1) = ((x1 + radius).min(w), (y1 + radius).min(h));
    let cw = cx1 - cx0;
    let ch = cy1 - cy0;
    let mut crop = Vec::with_capacity(cw * ch);
    for y in cy0..cy1 {
        crop.extend_from_slice(&mask.data[y * w + cx0..y * w + cx1]);
    }
    let opened = dilate_raw(&erode_raw(&crop, cw, ch, radius), cw, ch, radius);
    let mut out = Mask::new(w, h);
    for (k, y) in (cy0..cy1).enumerate() {
        out.data[y * w + cx0..y * w + cx1].copy_from_slice(&opened[k * cw..(k + 1) * cw]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_rows(rows: &[&str]) -> Mask {
        let h = rows.len();
        let w = rows[0].len();
        let data = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        Mask {
            width: w,
            height: h,
            data,
        }
    }

    /// Direct definition: union of every fully contained window.
    fn open_brute(mask: &Mask, r: usize) -> Mask {
        let (w, h) = (mask.width as isize, mask.height as isize);
        let r = r as isize;
        let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h;
        let fits = |cx: isize, cy: isize| {
            (-r..=r).all(|dy| {
                (-r..=r).all(|dx| {
                    let (x, y) = (cx + dx, cy + dy);
                    !inside(x, y) || mask.get(x as usize, y as usize)
                })
            })
        };
        let mut out = Mask::new(mask.width, mask.height);
        for cy in 0..h {
            for cx in 0..w {
                if fits(cx, cy) {
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let (x, y) = (cx + dx, cy + dy);
                            if inside(x, y) {
                                out.set(x as usize, y as usize, true);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn radius_zero_is_identity() {
        let m = from_rows(&["#..#", ".##.", "#..."]);
        assert_eq!(morph_open(&m, 0), m);
    }

    #[test]
    fn removes_isolated_pixel() {
        let m = from_rows(&[".....", ".....", "..#..", ".....", "....."]);
        assert!(morph_open(&m, 1).is_empty());
    }

    #[test]
    fn keeps_stripe_drops_salt() {
        let mut m = Mask::new(40, 20);
        for y in 7..12 {
            for x in 0..40 {
                m.set(x, y, true);
            }
        }
        let stripe = m.clone();
        m.set(5, 2, true);
        m.set(30, 16, true);
        m.set(20, 0, true);
        assert_eq!(morph_open(&m, 1), stripe);
    }

    proptest! {
        #[test]
        fn matches_definition_and_is_idempotent(
            bits in proptest::collection::vec(proptest::bool::weighted(0.6), 13 * 9),
            r in 0usize..3,
            big in any::<bool>(),
        ) {
            let m = Mask { width: 13, height: 9, data: bits };
            let r = if big { r + 9 } else { r };
            let once = morph_open(&m, r);
            prop_assert_eq!(&once, &open_brute(&m, r));
            prop_assert_eq!(morph_open(&once, r), once);
        }
    }
}
