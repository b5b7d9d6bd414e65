//! Two-branch hand segmentation. Pixels inside the projected screen border
//! are classified by colour against the cyan/blue screen (the screen's depth
//! is unreliable); pixels outside it are classified by whether their
//! back-projected 3-D point falls in the region of interest around the phone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{self, Point2};
use crate::model::{ColorImage, PhoneGeometry, Pose, Rgb, RgbdFrame, RoiBox};
pub use crate::model::SegmentMask;
use crate::tracker::project_screen_border;
use crate::Result;
use nalgebra::Vector3;

pub const DEFAULT_TAU: f64 = 0.5;

/// Skin-versus-screen colour score `1 − B + 0.5·R`, compared against `tau`.
#[inline]
pub fn color_score(rgb: Rgb) -> f64 {
    1.0 - rgb[2] as f64 + 0.5 * rgb[0] as f64
}

#[inline]
pub fn color_test(rgb: Rgb, tau: f64) -> bool {
    color_score(rgb) > tau
}

/// Whether a camera-frame point lies in the box spanning the screen plus
/// `planar_margin` on each side and `depth_extent` above the screen.
/// Points with zero depth are invalid samples and never pass.
pub fn depth_test(point: &Vector3<f64>, pose: &Pose, geometry: &PhoneGeometry, roi: &RoiBox) -> bool {
    if point.z == 0.0 {
        return false;
    }
    let q = pose.to_phone_coords(point);
    q.x.abs() <= geometry.screen_width / 2.0 + roi.planar_margin
        && q.y.abs() <= geometry.screen_height / 2.0 + roi.planar_margin
        && q.z >= 0.0
        && q.z <= roi.depth_extent
}

/// Which rule decided a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Inside the screen border: colour test.
    Color,
    /// Outside the screen border: depth/ROI test.
    Depth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub mask: SegmentMask,
    pub branch: Vec<Branch>,
    pub border: Vec<Point2>,
}

impl Segmentation {
    pub fn branch_counts(&self) -> (usize, usize) {
        let color = self.branch.iter().filter(|b| **b == Branch::Color).count();
        (color, self.branch.len() - color)
    }

    /// Foreground pixels contributed by each branch: (colour, depth).
    pub fn foreground_by_branch(&self) -> (usize, usize) {
        let mut out = (0, 0);
        for (b, m) in self.branch.iter().zip(&self.mask.bits) {
            if *m {
                match b {
                    Branch::Color => out.0 += 1,
                    Branch::Depth => out.1 += 1,
                }
            }
        }
        out
    }

    /// Debug raster: colour-branch foreground red, depth-branch foreground
    /// green, colour-branch background dark blue, depth background black.
    pub fn branch_png(&self) -> Result<Vec<u8>> {
        let data = self
            .branch
            .iter()
            .zip(&self.mask.bits)
            .map(|(b, m)| match (b, m) {
                (Branch::Color, true) => [1.0, 0.0, 0.0],
                (Branch::Depth, true) => [0.0, 1.0, 0.0],
                (Branch::Color, false) => [0.0, 0.0, 0.35],
                (Branch::Depth, false) => [0.0, 0.0, 0.0],
            })
            .collect();
        ColorImage::from_vec(self.mask.width, self.mask.height, data)?.encode_png()
    }
}

/// Segments the hand, returning only the mask.
pub fn segment(frame: &RgbdFrame, pose: &Pose, geometry: &PhoneGeometry, roi: &RoiBox, tau: f64) -> SegmentMask {
    segment_detailed(frame, pose, geometry, roi, tau).mask
}

/// Segments the hand and records which branch decided each pixel.
pub fn segment_detailed(
    frame: &RgbdFrame,
    pose: &Pose,
    geometry: &PhoneGeometry,
    roi: &RoiBox,
    tau: f64,
) -> Segmentation {
    let k = frame.intrinsics;
    let (w, h) = (k.width as usize, k.height as usize);
    // A screen that cannot be projected has no interior.
    let border = project_screen_border(pose, geometry, &k).unwrap_or_default();

    let rows: Vec<(Vec<bool>, Vec<Branch>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut bits = Vec::with_capacity(w);
            let mut branch = Vec::with_capacity(w);
            for x in 0..w {
                let i = y * w + x;
                let uv = [x as f64, y as f64];
                if border.len() >= 3 && geom::in_convex_polygon(&border, uv, 1e-9) {
                    branch.push(Branch::Color);
                    bits.push(color_test(frame.color.data[i], tau));
                } else {
                    branch.push(Branch::Depth);
                    let d = frame.depth.data[i];
                    let hit = d > 0.0 && depth_test(&k.backproject(uv[0], uv[1], d), pose, geometry, roi);
                    bits.push(hit);
                }
            }
            (bits, branch)
        })
        .collect();

    let mut mask = SegmentMask::new(k.width, k.height);
    let mut branch = Vec::with_capacity(w * h);
    for (y, (bits, b)) in rows.into_iter().enumerate() {
        mask.bits[y * w..(y + 1) * w].copy_from_slice(&bits);
        branch.extend(b);
    }
    Segmentation { mask, branch, border }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::{render, HandSpec, SceneSpec};

    #[test]
    fn colour_scores() {
        assert!(!color_test([0.0, 1.0, 1.0], 0.5));
        assert_eq!(color_score([0.0, 1.0, 1.0]), 0.0);
        assert!(!color_test([0.0, 0.0, 1.0], 0.5));
        assert_eq!(color_score([0.0, 0.0, 1.0]), 0.0);
        assert!(color_test([0.8, 0.4, 0.4], 0.5));
        assert!((color_score([0.8, 0.4, 0.4]) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn roi_box_boundaries() {
        let pose = Pose::frontal(0.3);
        let g = PhoneGeometry::default();
        let roi = RoiBox::default();
        let at = |x: f64, y: f64, z: f64| pose.from_phone_coords(&Vector3::new(x, y, z));
        assert!(depth_test(&at(0.0, 0.0, 0.0), &pose, &g, &roi));
        assert!(!depth_test(&at(0.0, 0.0, 0.03), &pose, &g, &roi));
        assert!(depth_test(&at(0.0, 0.0, 0.0199), &pose, &g, &roi));
        assert!(!depth_test(&at(0.0, 0.0, -0.001), &pose, &g, &roi));
        let edge = g.screen_width / 2.0;
        assert!(!depth_test(&at(edge + 0.07, 0.0, 0.01), &pose, &g, &roi));
        assert!(depth_test(&at(edge + 0.059, 0.0, 0.01), &pose, &g, &roi));
        assert!(!depth_test(&Vector3::new(0.0, 0.0, 0.0), &Pose::identity(), &g, &roi));
    }

    #[test]
    fn no_hand_gives_empty_mask() {
        let spec = SceneSpec::new(Pose::frontal(0.3)).glossy();
        let (frame, _) = render(&spec).unwrap();
        let mask = segment(&frame, &spec.phone_pose, &spec.phone_geometry, &RoiBox::default(), DEFAULT_TAU);
        assert!(mask.is_empty());
    }

    #[test]
    fn branches_partition_the_frame() {
        let spec = SceneSpec::new(Pose::frontal(0.3))
            .with_hand(HandSpec::open_hand([0.035, -0.03], 0.9, 0.4, 0.01))
            .glossy();
        let (frame, truth) = render(&spec).unwrap();
        let seg = segment_detailed(&frame, &spec.phone_pose, &spec.phone_geometry, &RoiBox::default(), DEFAULT_TAU);
        let (a, b) = seg.branch_counts();
        assert_eq!(a + b, frame.intrinsics.pixel_count());
        let (fa, fb) = seg.foreground_by_branch();
        let total = (fa + fb) as f64;
        assert!(fa as f64 >= 0.1 * total && fb as f64 >= 0.1 * total);
        assert!(seg.mask.iou(&truth.hand_mask) >= 0.95, "iou {}", seg.mask.iou(&truth.hand_mask));
    }

    #[test]
    fn raising_tau_never_adds_pixels() {
        let spec = SceneSpec::new(Pose::frontal(0.3))
            .with_hand(HandSpec::open_hand([0.0, -0.02], 0.7, 0.0, 0.01).with_texture(0.2))
            .glossy();
        let (frame, _) = render(&spec).unwrap();
        let roi = RoiBox::default();
        let mut prev: Option<Segmentation> = None;
        for tau in [0.1, 0.3, 0.5, 0.7, 0.9, 1.1] {
            let seg = segment_detailed(&frame, &spec.phone_pose, &spec.phone_geometry, &roi, tau);
            if let Some(p) = &prev {
                for i in 0..seg.mask.bits.len() {
                    if seg.branch[i] == Branch::Color && seg.mask.bits[i] {
                        assert!(p.mask.bits[i]);
                    }
                }
            }
            prev = Some(seg);
        }
    }

    #[test]
    fn depth_branch_ignores_invalid_depth() {
        let spec = SceneSpec::new(Pose::frontal(0.3))
            .with_hand(HandSpec::open_hand([0.07, 0.0], 0.8, 0.0, 0.01))
            .glossy();
        let (mut frame, _) = render(&spec).unwrap();
        for d in frame.depth.data.iter_mut() {
            *d = 0.0;
        }
        let seg = segment_detailed(&frame, &spec.phone_pose, &spec.phone_geometry, &RoiBox::default(), DEFAULT_TAU);
        let (_, fb) = seg.foreground_by_branch();
        assert_eq!(fb, 0);
    }
}
