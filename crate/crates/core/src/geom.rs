//! Planar geometry helpers: homographies and polygon predicates.

use nalgebra::{DMatrix, Matrix3, Vector3};

pub type Point2 = [f64; 2];

/// Projective map of the plane, `x' ~ H·(x, y, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    #[inline]
    pub fn apply(&self, p: Point2) -> Point2 {
        let v = self.0 * Vector3::new(p[0], p[1], 1.0);
        [v.x / v.z, v.y / v.z]
    }

    pub fn inverse(&self) -> Option<Homography> {
        self.0.try_inverse().map(Homography)
    }

    /// Normalised direct linear transform over `n ≥ 4` correspondences.
    /// Returns `None` when the correspondences do not pin down a homography.
    pub fn estimate(src: &[Point2], dst: &[Point2]) -> Option<Homography> {
        let n = src.len();
        if n < 4 || dst.len() != n {
            return None;
        }
        let ts = normalizer(src)?;
        let td = normalizer(dst)?;
        let mut a = DMatrix::<f64>::zeros(2 * n.max(5), 9);
        for (i, (s, d)) in src.iter().zip(dst).enumerate() {
            let s = apply_affine(&ts, *s);
            let d = apply_affine(&td, *d);
            let (x, y, u, v) = (s[0], s[1], d[0], d[1]);
            a.row_mut(2 * i)
                .copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
            a.row_mut(2 * i + 1)
                .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
        }
        // With exactly 4 points the zero-padded row keeps the SVD square enough
        // for nalgebra to return a full V.
        let svd = a.svd(false, true);
        let v_t = svd.v_t?;
        let sv = &svd.singular_values;
        // Rank check: the second-smallest singular value must be well clear of zero.
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.len() < 2 || sorted[1] < 1e-10 * sorted[sorted.len() - 1] {
            return None;
        }
        let (imin, _) = sv
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
        let h = v_t.row(imin);
        let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
        let full = td.try_inverse()? * hn * ts;
        let scale = full[(2, 2)];
        let full = if scale.abs() > 1e-300 { full / scale } else { full };
        if !full.iter().all(|v| v.is_finite()) {
            return None;
        }
        Some(Homography(full))
    }
}

fn normalizer(pts: &[Point2]) -> Option<Matrix3<f64>> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean_d = pts
        .iter()
        .map(|p| ((p[0] - mx).powi(2) + (p[1] - my).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean_d > 1e-300) {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_d;
    Some(Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0))
}

fn apply_affine(m: &Matrix3<f64>, p: Point2) -> Point2 {
    [
        m[(0, 0)] * p[0] + m[(0, 1)] * p[1] + m[(0, 2)],
        m[(1, 0)] * p[0] + m[(1, 1)] * p[1] + m[(1, 2)],
    ]
}

#[inline]
pub fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace signed area; positive for counter-clockwise in a y-up frame
/// (clockwise on screen in a y-down image frame).
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s / 2.0
}

pub fn is_convex(poly: &[Point2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0;
    for i in 0..n {
        let c = cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        if c.abs() < 1e-15 {
            return false;
        }
        if sign == 0.0 {
            sign = c.signum();
        } else if c.signum() != sign {
            return false;
        }
    }
    true
}

/// Inclusive point-in-convex-polygon test (either winding).
pub fn in_convex_polygon(poly: &[Point2], p: Point2, eps: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let orient = signed_area(poly).signum();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt().max(1e-300);
        orient * cross(a, b, p) / len >= -eps
    })
}

/// Winding-number point-in-polygon test for simple polygons.
pub fn winding_number(poly: &[Point2], p: Point2) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

pub fn in_polygon(poly: &[Point2], p: Point2) -> bool {
    winding_number(poly, p) != 0
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2| {
        cross(p, q, r) == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(c, d, a) || on(c, d, b) || on(a, b, c) || on(a, b, d)
}

/// True when no two non-adjacent edges touch and no vertex repeats.
pub fn is_simple_polygon(poly: &[Point2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if poly[i] == poly[j] {
                return false;
            }
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Andrew's monotone chain; returns hull in counter-clockwise order (y-up
/// sense), without repeated end point.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Sutherland–Hodgman clip of a polygon against an axis-aligned rectangle.
pub fn clip_to_rect(poly: &[Point2], x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point2> {
    let mut out = poly.to_vec();
    let edges: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, bound, keep_greater) in edges {
        let input = std::mem::take(&mut out);
        let n = input.len();
        if n == 0 {
            break;
        }
        let inside = |p: &Point2| {
            if keep_greater {
                p[axis] >= bound
            } else {
                p[axis] <= bound
            }
        };
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                out.push([
                    prev[0] + t * (cur[0] - prev[0]),
                    prev[1] + t * (cur[1] - prev[1]),
                ]);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_homography_is_exact() {
        let src = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let dst = [[10.0, 12.0], [52.0, 9.0], [57.0, 61.0], [8.0, 55.0]];
        let h = Homography::estimate(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            let p = h.apply(*s);
            assert!((p[0] - d[0]).abs() < 1e-9 && (p[1] - d[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn collinear_points_have_no_homography() {
        let src = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let dst = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        assert!(Homography::estimate(&src, &dst).is_none());
    }

    #[test]
    fn polygon_predicates() {
        let sq = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert!(in_convex_polygon(&sq, [1.0, 1.0], 0.0));
        assert!(in_convex_polygon(&sq, [2.0, 1.0], 0.0));
        assert!(!in_convex_polygon(&sq, [2.1, 1.0], 0.0));
        assert!(in_polygon(&sq, [1.0, 1.0]));
        assert!(is_simple_polygon(&sq));
        let bow = [[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]];
        assert!(!is_simple_polygon(&bow));
        assert_eq!(convex_hull(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [1.0, 0.2], [1.0, -1.0]]).len(), 4);
        let clipped = clip_to_rect(&[[-1.0, -1.0], [3.0, -1.0], [3.0, 3.0], [-1.0, 3.0]], 0.0, 0.0, 2.0, 2.0);
        assert!((signed_area(&clipped) - 4.0).abs() < 1e-12);
    }
}
