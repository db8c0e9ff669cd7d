use nalgebra::{Matrix3, SMatrix, Vector3};

use super::GeometryError;

pub type Point = nalgebra::Point2<f64>;

/// Projective map of the plane, stored with `m[(2, 2)] == 1` whenever that
/// entry is nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

const DET_EPS: f64 = 1e-12;

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Calibration("non-finite homography entry".into()));
        }
        let m = if m[(2, 2)].abs() > f64::EPSILON {
            m / m[(2, 2)]
        } else {
            m
        };
        // Scale-free invertibility test.
        let norm = m.norm();
        if norm == 0.0 || (m.determinant() / norm.powi(3)).abs() < DET_EPS {
            return Err(GeometryError::Calibration("homography is singular".into()));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        Self::from_matrix(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        let m = &self.m;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        let mut m = Matrix3::identity();
        m[(0, 2)] = tx;
        m[(1, 2)] = ty;
        Self { m }
    }

    pub fn inverse(&self) -> Self {
        let inv = self
            .m
            .try_inverse()
            .expect("construction guarantees an invertible matrix");
        Self::from_matrix(inv).expect("inverse of an invertible homography")
    }

    /// Projective transform with perspective divide.
    #[inline]
    pub fn apply(&self, p: Point) -> Result<Point, GeometryError> {
        let v = self.m * Vector3::new(p.x, p.y, 1.0);
        let scale = v[0].abs().max(v[1].abs()).max(1.0);
        if v[2].abs() <= 1e-12 * scale {
            return Err(GeometryError::PointAtInfinity(v[2]));
        }
        Ok(Point::new(v[0] / v[2], v[1] / v[2]))
    }

    pub fn compose(&self, then: &Homography) -> Result<Homography, GeometryError> {
        Homography::from_matrix(then.m * self.m)
    }
}

pub fn warp_point(p: Point, h: &Homography) -> Result<Point, GeometryError> {
    h.apply(p)
}

/// Translate to the centroid and scale so the mean distance is sqrt(2).
fn normalize(pts: &[Point; 4]) -> ([Point; 4], Matrix3<f64>) {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean = pts
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / 4.0;
    let s = if mean > 1e-12 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let out = pts.map(|p| Point::new(s * (p.x - cx), s * (p.y - cy)));
    (out, t)
}

fn check_general_position(pts: &[Point; 4], which: &str) -> Result<(), GeometryError> {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    for [a, b, c] in TRIPLES {
        let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
        let cross = (pb.x - pa.x) * (pc.y - pa.y) - (pb.y - pa.y) * (pc.x - pa.x);
        if cross.abs() < 1e-6 {
            return Err(GeometryError::Calibration(format!(
                "{which} points {a}, {b}, {c} are collinear"
            )));
        }
    }
    Ok(())
}

/// Normalized DLT from exactly four correspondences: the result maps each
/// `src[i]` to `dst[i]`.
pub fn estimate_homography(src: &[Point; 4], dst: &[Point; 4]) -> Result<Homography, GeometryError> {
    if src.iter().chain(dst).any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(GeometryError::Calibration("non-finite correspondence".into()));
    }
    let (ns, ts) = normalize(src);
    let (nd, td) = normalize(dst);
    check_general_position(&ns, "source")?;
    check_general_position(&nd, "target")?;

    let mut a = SMatrix::<f64, 8, 9>::zeros();
    for k in 0..4 {
        let (x, y) = (ns[k].x, ns[k].y);
        let (u, v) = (nd[k].x, nd[k].y);
        let r = 2 * k;
        a[(r, 0)] = -x;
        a[(r, 1)] = -y;
        a[(r, 2)] = -1.0;
        a[(r, 6)] = u * x;
        a[(r, 7)] = u * y;
        a[(r, 8)] = u;
        a[(r + 1, 3)] = -x;
        a[(r + 1, 4)] = -y;
        a[(r + 1, 5)] = -1.0;
        a[(r + 1, 6)] = v * x;
        a[(r + 1, 7)] = v * y;
        a[(r + 1, 8)] = v;
    }
    // Null vector of A = eigenvector of AᵀA with the smallest eigenvalue.
    let eig = (a.transpose() * a).symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nine eigenvalues");
    let h = eig.eigenvectors.column(idx);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td
        .try_inverse()
        .ok_or_else(|| GeometryError::Calibration("target normalization singular".into()))?;
    let homography = Homography::from_matrix(td_inv * hn * ts)?;

    for (s, d) in src.iter().zip(dst) {
        let p = homography.apply(*s)?;
        let err = ((p.x - d.x).powi(2) + (p.y - d.y).powi(2)).sqrt();
        let scale = d.x.abs().max(d.y.abs()).max(1.0);
        if err > 1e-9 * scale {
            return Err(GeometryError::Calibration(format!(
                "correspondence residual {err:e} too large"
            )));
        }
    }
    Ok(homography)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> [Point; 4] {
        [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    /// Closed-form square-to-quadrilateral projective map (Heckbert), used as
    /// an independent route to the DLT result.
    fn square_to_quad(q: &[Point; 4], u: f64, v: f64) -> Point {
        let (x0, x1, x2, x3) = (q[0].x, q[1].x, q[2].x, q[3].x);
        let (y0, y1, y2, y3) = (q[0].y, q[1].y, q[2].y, q[3].y);
        let sx = x0 - x1 + x2 - x3;
        let sy = y0 - y1 + y2 - y3;
        let (dx1, dx2, dy1, dy2) = (x1 - x2, x3 - x2, y1 - y2, y3 - y2);
        let den = dx1 * dy2 - dx2 * dy1;
        let g = (sx * dy2 - dx2 * sy) / den;
        let h = (dx1 * sy - sx * dy1) / den;
        let a = x1 - x0 + g * x1;
        let b = x3 - x0 + h * x3;
        let d = y1 - y0 + g * y1;
        let e = y3 - y0 + h * y3;
        let w = g * u + h * v + 1.0;
        Point::new((a * u + b * v + x0) / w, (d * u + e * v + y0) / w)
    }

    fn close(a: Point, b: Point, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
    }

    #[test]
    fn identity_correspondences() {
        let sq = unit_square();
        let h = estimate_homography(&sq, &sq).unwrap();
        let m = h.matrix();
        assert!((m - Matrix3::identity()).abs().max() < 1e-12, "{m}");
    }

    #[test]
    fn pure_scaling() {
        let sq = unit_square();
        let big = sq.map(|p| Point::new(2.0 * p.x, 2.0 * p.y));
        let h = estimate_homography(&sq, &big).unwrap();
        let want = Matrix3::new(2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0);
        assert!((h.matrix() - want).abs().max() < 1e-12);
    }

    #[test]
    fn trapezoid_matches_projective_interpolation() {
        let trap = [
            Point::new(10.0, 20.0),
            Point::new(90.0, 20.0),
            Point::new(70.0, 80.0),
            Point::new(30.0, 80.0),
        ];
        let h = estimate_homography(&unit_square(), &trap).unwrap();
        for (u, v) in [(0.3, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            let want = square_to_quad(&trap, u, v);
            let got = warp_point(Point::new(u, v), &h).unwrap();
            assert!(close(got, want, 1e-6), "{got} vs {want}");
        }
        for (s, d) in unit_square().iter().zip(&trap) {
            assert!(close(h.apply(*s).unwrap(), *d, 1e-6));
        }
    }

    #[test]
    fn degenerate_configuration() {
        let bad = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 1.0),
        ];
        assert!(matches!(
            estimate_homography(&bad, &unit_square()),
            Err(GeometryError::Calibration(_))
        ));
    }

    #[test]
    fn identity_and_translation_warps() {
        let p = Point::new(12.5, -3.0);
        assert_eq!(warp_point(p, &Homography::identity()).unwrap(), p);
        let t = Homography::translation(4.0, 5.0);
        assert_eq!(warp_point(p, &t).unwrap(), Point::new(16.5, 2.0));
    }

    #[test]
    fn point_at_infinity() {
        let h = Homography::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(
            warp_point(Point::new(-1.0, 3.0), &h),
            Err(GeometryError::PointAtInfinity(_))
        ));
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(Homography::from_rows([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn warp_round_trip(
            jitter in proptest::collection::vec(-0.2..0.2f64, 8),
            px in -50.0..150.0f64,
            py in -50.0..150.0f64,
        ) {
            let base = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)];
            let dst: [Point; 4] = std::array::from_fn(|i| {
                Point::new(base[i].0 * (1.0 + jitter[2 * i]) + 7.0, base[i].1 * (1.0 + jitter[2 * i + 1]) - 3.0)
            });
            let src = base.map(|(x, y)| Point::new(x, y));
            let h = estimate_homography(&src, &dst).unwrap();
            let p = Point::new(px, py);
            if let Ok(q) = warp_point(p, &h) {
                if let Ok(back) = warp_point(q, &h.inverse()) {
                    let scale = 1.0 + q.x.abs().max(q.y.abs()) / 1e3;
                    prop_assert!(close(back, p, 1e-6 * scale), "{back} vs {p}");
                }
            }
        }
    }
}
