use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geom::{self, Homography, Point2};
use crate::model::{ColorImage, PhoneGeometry, MARKER_GRID};
use crate::Result;

/// A decoded marker: id plus image corners in canonical order (the marker's
/// top-left first, then clockwise in the marker frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkerDetection {
    pub marker_id: u32,
    pub corners: [Point2; 4],
}

const MIN_AREA_PX: f64 = 16.0;
const INK_THRESHOLD: f32 = 0.5;

/// How strongly a pixel looks like blue marker ink: `B − max(R, G)`,
/// clamped to `[0, 1]`. Cyan screen, skin and grey all score 0.
pub fn blueness(color: &ColorImage) -> Vec<f32> {
    color
        .data
        .iter()
        .map(|c| (c[2] - c[0].max(c[1])).clamp(0.0, 1.0))
        .collect()
}

struct Plane<'a> {
    w: usize,
    h: usize,
    v: &'a [f32],
}

impl Plane<'_> {
    /// Bilinear lookup; outside the image reads as 0.
    fn sample(&self, x: f64, y: f64) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = (x - x0) as f32;
        let fy = (y - y0) as f32;
        let at = |xi: f64, yi: f64| -> f32 {
            if xi < 0.0 || yi < 0.0 || xi >= self.w as f64 || yi >= self.h as f64 {
                0.0
            } else {
                self.v[yi as usize * self.w + xi as usize]
            }
        };
        let a = at(x0, y0);
        let b = at(x0 + 1.0, y0);
        let c = at(x0, y0 + 1.0);
        let d = at(x0 + 1.0, y0 + 1.0);
        (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
    }
}

/// Finds every marker of `geometry` that is fully visible in `color`.
/// Partially occluded or unreadable markers are skipped.
pub fn detect_markers(color: &ColorImage, geometry: &PhoneGeometry) -> Vec<MarkerDetection> {
    let (w, h) = (color.width as usize, color.height as usize);
    let blue = blueness(color);
    let plane = Plane { w, h, v: &blue };
    let ink: Vec<bool> = blue.iter().map(|b| *b > INK_THRESHOLD).collect();

    let mut detections = Vec::new();
    for component in components(&ink, w, h) {
        if (component.len() as f64) < MIN_AREA_PX {
            continue;
        }
        let Some(quad) = fit_quad(&component) else {
            continue;
        };
        let Some(refined) = refine_corners(&plane, &quad) else {
            continue;
        };
        if geom::signed_area(&refined).abs() < MIN_AREA_PX || !geom::is_convex(&refined) {
            continue;
        }
        if let Some(det) = decode(&plane, &refined, geometry) {
            detections.push(det);
        }
    }
    // One detection per id; keep the larger if a pattern repeats.
    detections.sort_by(|a, b| {
        a.marker_id.cmp(&b.marker_id).then(
            geom::signed_area(&b.corners)
                .abs()
                .partial_cmp(&geom::signed_area(&a.corners).abs())
                .unwrap(),
        )
    });
    detections.dedup_by_key(|d| d.marker_id);
    detections
}

/// 8-connected components of the ink mask, as pixel coordinate lists.
fn components(ink: &[bool], w: usize, h: usize) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; ink.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..ink.len() {
        if !ink[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x, y));
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if ink[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        out.push(pixels);
    }
    out
}

/// Approximates a component's outline by a quadrilateral, corners ordered
/// clockwise on screen (positive shoelace area in y-down coordinates).
fn fit_quad(pixels: &[(usize, usize)]) -> Option<[Point2; 4]> {
    let (mut ymin, mut ymax) = (usize::MAX, 0);
    for &(_, y) in pixels {
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let rows = ymax - ymin + 1;
    let mut lo = vec![usize::MAX; rows];
    let mut hi = vec![0usize; rows];
    for &(x, y) in pixels {
        let r = y - ymin;
        lo[r] = lo[r].min(x);
        hi[r] = hi[r].max(x);
    }
    let mut extremes = Vec::with_capacity(rows * 2);
    for r in 0..rows {
        if lo[r] != usize::MAX {
            let y = (r + ymin) as f64;
            extremes.push([lo[r] as f64, y]);
            extremes.push([hi[r] as f64, y]);
        }
    }
    let hull = geom::convex_hull(&extremes);
    if hull.len() < 4 {
        return None;
    }
    let n = hull.len() as f64;
    let centroid = [
        hull.iter().map(|p| p[0]).sum::<f64>() / n,
        hull.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let d2 = |a: Point2, b: Point2| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let ia = (0..hull.len()).max_by(|&i, &j| d2(hull[i], centroid).partial_cmp(&d2(hull[j], centroid)).unwrap())?;
    let a = hull[ia];
    let ic = (0..hull.len()).max_by(|&i, &j| d2(hull[i], a).partial_cmp(&d2(hull[j], a)).unwrap())?;
    let c = hull[ic];
    let side = |p: Point2| geom::cross(a, c, p);
    let ib = (0..hull.len()).max_by(|&i, &j| side(hull[i]).partial_cmp(&side(hull[j])).unwrap())?;
    let id = (0..hull.len()).min_by(|&i, &j| side(hull[i]).partial_cmp(&side(hull[j])).unwrap())?;
    let (b, d) = (hull[ib], hull[id]);
    if side(b) <= 0.0 || side(d) >= 0.0 {
        return None;
    }
    let mut quad = [a, b, c, d];
    if geom::signed_area(&quad) < 0.0 {
        quad.reverse();
    }
    // The quad should account for nearly all of the hull.
    let hull_area = geom::signed_area(&hull).abs();
    let quad_area = geom::signed_area(&quad).abs();
    if quad_area < MIN_AREA_PX || quad_area < 0.85 * hull_area {
        return None;
    }
    Some(quad)
}

/// Sub-pixel corner refinement: fits a line to the 0.5-ink iso-contour along
/// each side, then intersects adjacent lines.
fn refine_corners(plane: &Plane, quad: &[Point2; 4]) -> Option<[Point2; 4]> {
    let centroid = [
        quad.iter().map(|p| p[0]).sum::<f64>() / 4.0,
        quad.iter().map(|p| p[1]).sum::<f64>() / 4.0,
    ];
    let mut lines = Vec::with_capacity(4);
    for k in 0..4 {
        let p = quad[k];
        let q = quad[(k + 1) % 4];
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if len < 3.0 {
            return None;
        }
        let mut normal = [dy / len, -dx / len];
        let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
        if (mid[0] - centroid[0]) * normal[0] + (mid[1] - centroid[1]) * normal[1] < 0.0 {
            normal = [-normal[0], -normal[1]];
        }
        let samples = (len / 0.75).ceil() as usize;
        let mut pts = Vec::with_capacity(samples);
        for s in 0..=samples {
            let t = 0.12 + 0.76 * s as f64 / samples as f64;
            let base = [p[0] + t * dx, p[1] + t * dy];
            if let Some(e) = edge_crossing(plane, base, normal) {
                pts.push(e);
            }
        }
        if pts.len() < 3 {
            return None;
        }
        lines.push(fit_line(&pts));
    }
    let mut out = [[0.0; 2]; 4];
    for k in 0..4 {
        out[k] = intersect(lines[(k + 3) % 4], lines[k])?;
        let moved = ((out[k][0] - quad[k][0]).powi(2) + (out[k][1] - quad[k][1]).powi(2)).sqrt();
        if moved > 4.0 {
            return None;
        }
    }
    Some(out)
}

/// Walks outward along `normal` from inside the marker and returns the
/// first point where ink drops below 0.5, linearly interpolated.
fn edge_crossing(plane: &Plane, base: Point2, normal: Point2) -> Option<Point2> {
    const REACH: f64 = 2.5;
    const STEP: f64 = 0.1;
    let at = |s: f64| plane.sample(base[0] + s * normal[0], base[1] + s * normal[1]);
    let mut s = -REACH;
    let mut prev = at(s);
    if prev < INK_THRESHOLD {
        return None;
    }
    while s < REACH {
        let next_s = s + STEP;
        let cur = at(next_s);
        if cur < INK_THRESHOLD {
            let f = ((prev - INK_THRESHOLD) / (prev - cur)) as f64;
            let e = s + f * STEP;
            return Some([base[0] + e * normal[0], base[1] + e * normal[1]]);
        }
        prev = cur;
        s = next_s;
    }
    None
}

/// Total-least-squares line: (point on line, unit direction).
fn fit_line(pts: &[Point2]) -> (Point2, Point2) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    ([mx, my], [theta.cos(), theta.sin()])
}

fn intersect(l1: (Point2, Point2), l2: (Point2, Point2)) -> Option<Point2> {
    let ((p, r), (q, s)) = (l1, l2);
    let denom = r[0] * s[1] - r[1] * s[0];
    if denom.abs() < 1e-9 {
        return None;
    }
    let t = ((q[0] - p[0]) * s[1] - (q[1] - p[1]) * s[0]) / denom;
    Some([p[0] + t * r[0], p[1] + t * r[1]])
}

/// Reads the cell grid for each of the four possible starting corners and
/// matches it against the configured patterns.
fn decode(plane: &Plane, corners: &[Point2; 4], geometry: &PhoneGeometry) -> Option<MarkerDetection> {
    let g = MARKER_GRID as f64;
    let cells = [[0.0, 0.0], [g, 0.0], [g, g], [0.0, g]];
    for start in 0..4 {
        let ordered = [
            corners[start],
            corners[(start + 1) % 4],
            corners[(start + 2) % 4],
            corners[(start + 3) % 4],
        ];
        let Some(map) = Homography::estimate(&cells, &ordered) else {
            continue;
        };
        let Some((border_errors, code)) = read_cells(plane, &map) else {
            continue;
        };
        if border_errors > 1 {
            // The border does not depend on orientation.
            return None;
        }
        for m in &geometry.marker_layout {
            if (m.bit_pattern ^ code).count_ones() <= 1 {
                return Some(MarkerDetection {
                    marker_id: m.marker_id,
                    corners: ordered,
                });
            }
        }
    }
    None
}

/// Returns (number of border cells not inked, interior code).
fn read_cells(plane: &Plane, map: &Homography) -> Option<(u32, u16)> {
    let mut border_errors = 0;
    let mut code = 0u16;
    for row in 0..MARKER_GRID {
        for col in 0..MARKER_GRID {
            let mut votes = 0;
            for sy in 0..3 {
                for sx in 0..3 {
                    let cx = col as f64 + 0.3 + 0.2 * sx as f64;
                    let cy = row as f64 + 0.3 + 0.2 * sy as f64;
                    let p = map.apply([cx, cy]);
                    if !p[0].is_finite() || !p[1].is_finite() {
                        return None;
                    }
                    if plane.sample(p[0], p[1]) > INK_THRESHOLD {
                        votes += 1;
                    }
                }
            }
            let inked = votes >= 5;
            let border = row == 0 || col == 0 || row == MARKER_GRID - 1 || col == MARKER_GRID - 1;
            if border {
                border_errors += (!inked) as u32;
            } else if inked {
                let i = (row - 1) * (MARKER_GRID - 2) + (col - 1);
                code |= 1 << (15 - i);
            }
        }
    }
    Some((border_errors, code))
}

/// Debug overlay: detected marker outlines in red, first corner in yellow.
pub fn overlay_png(color: &ColorImage, detections: &[MarkerDetection]) -> Result<Vec<u8>> {
    let mut img = color.clone();
    for d in detections {
        for k in 0..4 {
            draw_line(&mut img, d.corners[k], d.corners[(k + 1) % 4], [1.0, 0.0, 0.0]);
        }
        let c = d.corners[0];
        for dy in -2i64..=2 {
            for dx in -2i64..=2 {
                put(&mut img, c[0].round() as i64 + dx, c[1].round() as i64 + dy, [1.0, 1.0, 0.0]);
            }
        }
    }
    img.encode_png()
}

fn put(img: &mut ColorImage, x: i64, y: i64, c: [f32; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width && (y as u32) < img.height {
        img.set(x as u32, y as u32, c);
    }
}

fn draw_line(img: &mut ColorImage, a: Point2, b: Point2, c: [f32; 3]) {
    let steps = ((b[0] - a[0]).abs().max((b[1] - a[1]).abs()).ceil() as usize).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        put(
            img,
            (a[0] + t * (b[0] - a[0])).round() as i64,
            (a[1] + t * (b[1] - a[1])).round() as i64,
            c,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pose;
    use crate::scenegen::{render, HandSpec, SceneSpec};

    fn max_corner_error(d: &MarkerDetection, truth: &[Point2; 4]) -> f64 {
        d.corners
            .iter()
            .zip(truth)
            .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    #[test]
    fn uniform_frame_has_no_markers() {
        let img = ColorImage::new(64, 48, [0.3, 0.3, 0.3]);
        assert!(detect_markers(&img, &PhoneGeometry::default()).is_empty());
        let cyan = ColorImage::new(64, 48, [0.0, 1.0, 1.0]);
        assert!(detect_markers(&cyan, &PhoneGeometry::default()).is_empty());
    }

    #[test]
    fn frontal_frame_detects_all_markers_sub_half_pixel() {
        let spec = SceneSpec::new(Pose::frontal(0.3));
        let (frame, truth) = render(&spec).unwrap();
        let dets = detect_markers(&frame.color, &spec.phone_geometry);
        assert_eq!(dets.len(), spec.phone_geometry.marker_layout.len());
        for d in &dets {
            let err = max_corner_error(d, &truth.marker_corners_px[&d.marker_id]);
            assert!(err < 0.5, "marker {} corner error {err}", d.marker_id);
        }
    }

    #[test]
    fn hand_covering_two_markers_leaves_the_rest() {
        // Markers 0 and 2 sit in the left column, rows 0 and 1 (top half).
        let g = PhoneGeometry::default();
        let covered: Vec<u32> = vec![0, 2];
        let hand = HandSpec::new(
            vec![[-0.05, 0.075], [-0.0015, 0.075], [-0.0015, 0.002], [-0.05, 0.002]],
            0.008,
        );
        let spec = SceneSpec::new(Pose::frontal(0.3)).with_hand(hand);
        let (frame, _) = render(&spec).unwrap();
        let ids: Vec<u32> = detect_markers(&frame.color, &g).iter().map(|d| d.marker_id).collect();
        let expected: Vec<u32> = g
            .marker_layout
            .iter()
            .map(|m| m.marker_id)
            .filter(|id| !covered.contains(id))
            .collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn partially_occluded_marker_is_rejected() {
        // Cover the left half of marker 0 only.
        let g = PhoneGeometry::default();
        let m0 = g.marker(0).unwrap().corners;
        let xmid = (m0[0][0] + m0[1][0]) / 2.0;
        let hand = HandSpec::new(
            vec![[-0.05, 0.075], [xmid, 0.075], [xmid, 0.04], [-0.05, 0.04]],
            0.008,
        );
        let spec = SceneSpec::new(Pose::frontal(0.3)).with_hand(hand);
        let (frame, _) = render(&spec).unwrap();
        let ids: Vec<u32> = detect_markers(&frame.color, &g).iter().map(|d| d.marker_id).collect();
        assert!(!ids.contains(&0));
        assert_eq!(ids.len(), 7);
    }
}
