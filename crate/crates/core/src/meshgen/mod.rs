//! Hand meshing: contour-preserving point subsampling, Delaunay
//! triangulation, lifting to 3-D with the viewer eye offset, software
//! rasterisation and the SSIM metric used to compare renderings.

mod boundary;
mod delaunay;
mod raster;
mod ssim;

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use boundary::{is_boundary, subsample_interior, trace_boundary, Pixel};
pub use delaunay::delaunay;
pub use raster::{raster_at, rasterize, rasterize_projected, rasterize_projected_depth};
pub use ssim::{ssim, ssim_plane, DEFAULT_WINDOW, DYNAMIC_RANGE, K1, K2};

use crate::geom::Point2;
use crate::model::{CameraIntrinsics, DepthImage, Pose, RgbdFrame, RoiBox, SegmentMask};
use crate::{Error, Result};

pub const DEFAULT_STRIDE: u32 = 32;
/// Extra depth added to every vertex so the hand renders in front of the
/// virtual phone from the viewer's eye.
pub const EYE_OFFSET_M: f64 = 0.07;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HandMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub uv: Vec<[f64; 2]>,
    #[serde(skip)]
    pub source_frame_id: u64,
}

impl HandMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        if self.uv.len() != self.vertices.len() {
            return Err(Error::Mesh(format!(
                "{} uv coordinates for {} vertices",
                self.uv.len(),
                self.vertices.len()
            )));
        }
        let n = self.vertices.len() as u32;
        for (k, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= n) {
                return Err(Error::Mesh(format!("triangle {k} index out of range")));
            }
            let [a, b, c] = t.map(|i| self.uv[i as usize]);
            let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if area == 0.0 {
                return Err(Error::Mesh(format!("triangle {k} is degenerate")));
            }
        }
        for (k, p) in self.uv.iter().enumerate() {
            let inside = p[0] >= 0.0
                && p[1] >= 0.0
                && p[0] <= (width - 1) as f64
                && p[1] <= (height - 1) as f64;
            if !inside {
                return Err(Error::Mesh(format!("uv {k} outside {width}x{height}")));
            }
        }
        if let Some(k) = self.vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::Mesh(format!("vertex {k} is not finite")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    /// Writes `NNNNNN.mesh.json` into `dir` and returns its path.
    pub fn write_json(&self, dir: &Path, index: u64) -> Result<PathBuf> {
        let path = dir.join(mesh_file_name(index));
        std::fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn mesh_file_name(index: u64) -> String {
    format!("{index:06}.mesh.json")
}

/// Delaunay triangles over `points`, dropping any whose centroid rounds to a
/// background pixel of `mask`.
pub fn triangulate(points: &[Pixel], mask: &SegmentMask) -> Vec<[u32; 3]> {
    let pts: Vec<Point2> = points.iter().map(|p| [p[0] as f64, p[1] as f64]).collect();
    delaunay(&pts)
        .into_iter()
        .filter(|t| {
            let cx = (pts[t[0]][0] + pts[t[1]][0] + pts[t[2]][0]) / 3.0;
            let cy = (pts[t[0]][1] + pts[t[1]][1] + pts[t[2]][1]) / 3.0;
            mask.get_i(cx.round() as i64, cy.round() as i64)
        })
        .map(|t| t.map(|i| i as u32))
        .collect()
}

/// Back-projects each pixel with its depth and pushes it `eye_offset`
/// further along the optical axis.
pub fn lift_to_3d(
    points: &[Pixel],
    depth: &DepthImage,
    intrinsics: &CameraIntrinsics,
    eye_offset: f64,
) -> Result<Vec<[f64; 3]>> {
    points
        .iter()
        .map(|&[x, y]| {
            let d = depth.get(x, y);
            if !(d > 0.0) {
                return Err(Error::Mesh(format!("no depth at pixel ({x}, {y})")));
            }
            let p = intrinsics.backproject(x as f64, y as f64, d);
            Ok([p.x, p.y, p.z + eye_offset])
        })
        .collect()
}

/// Replaces invalid (zero) depth with the depth where the pixel ray meets
/// the plane lying `roi.depth_extent / 2` above the phone screen.
pub fn inpaint_depth(
    depth: &DepthImage,
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    roi: &RoiBox,
) -> DepthImage {
    let n = pose.normal();
    let n_dot_t = n.dot(&pose.translation);
    let lift = roi.depth_extent / 2.0;
    let mut out = depth.clone();
    for y in 0..depth.height {
        for x in 0..depth.width {
            let i = (y * depth.width + x) as usize;
            if out.data[i] > 0.0 {
                continue;
            }
            let ray: Vector3<f64> = intrinsics.ray(x as f64, y as f64);
            let denom = n.dot(&ray);
            if denom != 0.0 {
                let s = (n_dot_t + lift) / denom;
                if s > 0.0 {
                    out.data[i] = s;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeshParams {
    pub stride: u32,
    pub eye_offset: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            stride: DEFAULT_STRIDE,
            eye_offset: EYE_OFFSET_M,
        }
    }
}

/// Full mask-to-mesh path. With a phone pose, pixels lacking depth are
/// inpainted from the phone plane; without one they are an error.
pub fn build_mesh(
    frame: &RgbdFrame,
    mask: &SegmentMask,
    params: &MeshParams,
    phone: Option<(&Pose, &RoiBox)>,
) -> Result<HandMesh> {
    if params.stride == 0 {
        return Err(Error::Config("mesh stride must be at least 1".into()));
    }
    if mask.width != frame.width() || mask.height != frame.height() {
        return Err(Error::Dimension("mask and frame sizes differ".into()));
    }
    let contours = trace_boundary(mask);
    let points = subsample_interior(mask, params.stride, &contours);
    let triangles = triangulate(&points, mask);
    let filled;
    let depth = match phone {
        Some((pose, roi)) if points.iter().any(|&[x, y]| frame.depth.get(x, y) <= 0.0) => {
            filled = inpaint_depth(&frame.depth, &frame.intrinsics, pose, roi);
            &filled
        }
        _ => &frame.depth,
    };
    let vertices = lift_to_3d(&points, depth, &frame.intrinsics, params.eye_offset)?;
    Ok(HandMesh {
        vertices,
        triangles,
        uv: points.iter().map(|p| [p[0] as f64, p[1] as f64]).collect(),
        source_frame_id: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ColorImage;

    fn square_frame(side: u32) -> (RgbdFrame, SegmentMask) {
        let k = CameraIntrinsics::default();
        let mut color = ColorImage::new(k.width, k.height, [0.1, 0.1, 0.1]);
        let mut depth = DepthImage::new(k.width, k.height);
        let mut mask = SegmentMask::new(k.width, k.height);
        for y in 100..100 + side {
            for x in 200..200 + side {
                let t = ((x * 7 + y * 13) % 256) as f32 / 255.0;
                color.set(x, y, [t, 1.0 - t, (x % 5) as f32 / 4.0]);
                depth.data[(y * k.width + x) as usize] = 0.3;
                mask.set(x, y, true);
            }
        }
        (RgbdFrame::new(k, color, depth, 0).unwrap(), mask)
    }

    #[test]
    fn principal_point_lifts_to_depth_plus_offset() {
        let k = CameraIntrinsics::default();
        let mut depth = DepthImage::new(k.width, k.height);
        depth.data[(240 * k.width + 320) as usize] = 0.30;
        let v = lift_to_3d(&[[320, 240]], &depth, &k, 0.07).unwrap();
        assert!(v[0][0].abs() < 1e-15 && v[0][1].abs() < 1e-15);
        assert!((v[0][2] - 0.37).abs() < 1e-12);
        let v = lift_to_3d(&[[320, 240]], &depth, &k, 0.0).unwrap();
        assert_eq!(v[0][2], 0.30);
        assert!(lift_to_3d(&[[0, 0]], &depth, &k, 0.0).is_err());
    }

    #[test]
    fn empty_mesh_covers_nothing() {
        let img = ColorImage::new(16, 16, [1.0; 3]);
        let (_, cover) = rasterize(&HandMesh::default(), &img);
        assert_eq!(cover.count(), 0);
    }

    #[test]
    fn stride_one_square_reproduces_source() {
        let (frame, mask) = square_frame(24);
        let mesh = build_mesh(&frame, &mask, &MeshParams { stride: 1, eye_offset: 0.07 }, None)
            .unwrap();
        mesh.validate(frame.width(), frame.height()).unwrap();
        let (img, cover) = rasterize(&mesh, &frame.color);
        assert_eq!(cover, mask);
        for y in 0..frame.height() {
            for x in 0..frame.width() {
                if mask.get(x, y) {
                    assert_eq!(img.get(x, y), frame.color.get(x, y));
                }
            }
        }
    }

    #[test]
    fn pruning_removes_triangles_across_a_notch() {
        let mut mask = SegmentMask::new(60, 60);
        for y in 10..50 {
            for x in 10..50 {
                let notch = (25..35).contains(&x) && y < 40;
                mask.set(x, y, !notch);
            }
        }
        let contours = trace_boundary(&mask);
        let pts = subsample_interior(&mask, 8, &contours);
        let tris = triangulate(&pts, &mask);
        let all = delaunay(&pts.iter().map(|p| [p[0] as f64, p[1] as f64]).collect::<Vec<_>>());
        assert!(tris.len() < all.len());
        let mesh = HandMesh {
            vertices: pts.iter().map(|p| [p[0] as f64, p[1] as f64, 1.0]).collect(),
            triangles: tris,
            uv: pts.iter().map(|p| [p[0] as f64, p[1] as f64]).collect(),
            source_frame_id: 0,
        };
        let (_, cover) = rasterize(&mesh, &ColorImage::new(60, 60, [1.0; 3]));
        assert!(!cover.get(30, 20), "notch must stay uncovered");
    }

    #[test]
    fn json_round_trip_and_file_name() {
        let (frame, mask) = square_frame(10);
        let mesh = build_mesh(&frame, &mask, &MeshParams::default(), None).unwrap();
        let back = HandMesh::from_json(&mesh.to_json().unwrap()).unwrap();
        assert_eq!(back, mesh);
        let v: serde_json::Value = serde_json::from_slice(&mesh.to_json().unwrap()).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 3);
        assert_eq!(mesh_file_name(7), "000007.mesh.json");
        let dir = tempfile::tempdir().unwrap();
        let p = mesh.write_json(dir.path(), 12).unwrap();
        assert!(p.ends_with("000012.mesh.json"));
    }

    #[test]
    fn validation_catches_bad_meshes() {
        let mut m = HandMesh {
            vertices: vec![[0.0; 3]; 3],
            triangles: vec![[0, 1, 2]],
            uv: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            source_frame_id: 0,
        };
        assert!(m.validate(4, 4).is_ok());
        m.triangles[0] = [0, 1, 3];
        assert!(m.validate(4, 4).is_err());
        m.triangles[0] = [0, 1, 1];
        assert!(m.validate(4, 4).is_err());
        m.triangles[0] = [0, 1, 2];
        m.uv[1] = [4.0, 0.0];
        assert!(m.validate(4, 4).is_err());
    }

    #[test]
    fn inpainting_uses_raised_phone_plane() {
        let k = CameraIntrinsics::default();
        let pose = Pose::frontal(0.3);
        let roi = RoiBox::default();
        let filled = inpaint_depth(&DepthImage::new(k.width, k.height), &k, &pose, &roi);
        assert!((filled.get(320, 240) - (0.3 - roi.depth_extent / 2.0)).abs() < 1e-12);
    }
}
