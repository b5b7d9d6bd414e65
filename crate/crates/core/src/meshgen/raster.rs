use crate::geom::Point2;
use crate::model::{CameraIntrinsics, ColorImage, SegmentMask};

use super::HandMesh;

/// Renders `mesh` in source-image space: each vertex sits at its own uv.
pub fn rasterize(mesh: &HandMesh, source: &ColorImage) -> (ColorImage, SegmentMask) {
    raster_at(mesh, &mesh.uv, source, source.width, source.height)
}

/// Renders `mesh` by projecting its 3-D vertices through `intrinsics`.
/// Triangles with a vertex at or behind the camera are skipped.
pub fn rasterize_projected(
    mesh: &HandMesh,
    source: &ColorImage,
    intrinsics: &CameraIntrinsics,
) -> (ColorImage, SegmentMask) {
    let pos: Vec<Point2> = mesh
        .vertices
        .iter()
        .map(|v| {
            intrinsics
                .project(&nalgebra::Vector3::from(*v))
                .unwrap_or([f64::NAN, f64::NAN])
        })
        .collect();
    raster_at(mesh, &pos, source, intrinsics.width, intrinsics.height)
}

/// Projected rendering with a z-buffer. Depth is the camera-frame z,
/// interpolated perspective-correctly; uncovered pixels hold infinity.
pub fn rasterize_projected_depth(
    mesh: &HandMesh,
    source: &ColorImage,
    intrinsics: &CameraIntrinsics,
) -> (ColorImage, SegmentMask, Vec<f64>) {
    let mut pos = Vec::with_capacity(mesh.vertices.len());
    let mut inv_z = Vec::with_capacity(mesh.vertices.len());
    for v in &mesh.vertices {
        match intrinsics.project(&nalgebra::Vector3::from(*v)) {
            Some(p) => {
                pos.push(p);
                inv_z.push(1.0 / v[2]);
            }
            None => {
                pos.push([f64::NAN, f64::NAN]);
                inv_z.push(f64::NAN);
            }
        }
    }
    let mut zbuf = vec![f64::INFINITY; intrinsics.pixel_count()];
    let (img, cover) = raster_impl(
        mesh,
        &pos,
        Some((&inv_z, &mut zbuf)),
        source,
        intrinsics.width,
        intrinsics.height,
    );
    (img, cover, zbuf)
}

/// Barycentric uv interpolation with nearest-neighbour texture lookup.
/// Pixel centres on a shared edge are covered by both triangles.
pub fn raster_at(
    mesh: &HandMesh,
    positions: &[Point2],
    source: &ColorImage,
    width: u32,
    height: u32,
) -> (ColorImage, SegmentMask) {
    raster_impl(mesh, positions, None, source, width, height)
}

fn raster_impl(
    mesh: &HandMesh,
    positions: &[Point2],
    mut depth: Option<(&[f64], &mut [f64])>,
    source: &ColorImage,
    width: u32,
    height: u32,
) -> (ColorImage, SegmentMask) {
    let mut img = ColorImage::new(width, height, [0.0; 3]);
    let mut cover = SegmentMask::new(width, height);
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| positions[i as usize]);
        if [a, b, c].iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            continue;
        }
        let area = edge(a, b, c);
        if area == 0.0 {
            continue;
        }
        let sign = area.signum();
        let eps = 1e-9 * area.abs();
        let x0 = a[0].min(b[0]).min(c[0]).ceil().max(0.0);
        let x1 = a[0].max(b[0]).max(c[0]).floor().min(width as f64 - 1.0);
        let y0 = a[1].min(b[1]).min(c[1]).ceil().max(0.0);
        let y1 = a[1].max(b[1]).max(c[1]).floor().min(height as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let [ua, ub, uc] = t.map(|i| mesh.uv[i as usize]);
        for y in y0 as u32..=y1 as u32 {
            for x in x0 as u32..=x1 as u32 {
                let p = [x as f64, y as f64];
                let w0 = sign * edge(b, c, p);
                let w1 = sign * edge(c, a, p);
                let w2 = sign * edge(a, b, p);
                if w0 < -eps || w1 < -eps || w2 < -eps {
                    continue;
                }
                let s = w0 + w1 + w2;
                if let Some((inv_z, zbuf)) = depth.as_mut() {
                    let [ia, ib, ic] = t.map(|i| inv_z[i as usize]);
                    let z = s / (w0 * ia + w1 * ib + w2 * ic);
                    let k = (y * width + x) as usize;
                    if !(z < zbuf[k]) {
                        continue;
                    }
                    zbuf[k] = z;
                }
                let u = (w0 * ua[0] + w1 * ub[0] + w2 * uc[0]) / s;
                let v = (w0 * ua[1] + w1 * ub[1] + w2 * uc[1]) / s;
                let sx = (u.round().max(0.0) as u32).min(source.width - 1);
                let sy = (v.round().max(0.0) as u32).min(source.height - 1);
                img.set(x, y, source.get(sx, sy));
                cover.set(x, y, true);
            }
        }
    }
    (img, cover)
}

#[inline]
fn edge(a: Point2, b: Point2, p: Point2) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}
