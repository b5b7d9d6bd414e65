use empathd_core::meshgen::{rasterize_projected_depth, HandMesh};
use empathd_core::{CameraIntrinsics, ColorImage, PhoneGeometry, Pose, Rgb, VirtualDisplayConfig};
use nalgebra::Vector3;

/// Virtual room behind the phone.
pub const BACKGROUND: Rgb = [0.18, 0.18, 0.22];
/// Screen area outside the letterboxed app content.
pub const BEZEL: Rgb = [0.0, 0.0, 0.0];

/// Builds the viewer's image: the app screen on a magnified virtual phone
/// plus the textured hand, seen from the eye position.
#[derive(Debug, Clone, PartialEq)]
pub struct Compositor {
    pub intrinsics: CameraIntrinsics,
    pub geometry: PhoneGeometry,
    pub display: VirtualDisplayConfig,
    /// Depth camera to eye distance along the optical axis, metres. Hand
    /// meshes are expected to carry the same offset already.
    pub eye_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub image: ColorImage,
    pub screen_pixels: usize,
    pub hand_pixels: usize,
}

impl Compositor {
    /// Size in metres of the app content on the physical screen: the
    /// stream aspect letterboxed into the screen rectangle.
    pub fn content_size(&self) -> (f64, f64) {
        let (sw, sh) = (self.geometry.screen_width, self.geometry.screen_height);
        let aspect = self.display.stream_width as f64 / self.display.stream_height as f64;
        if sw / sh > aspect {
            (sh * aspect, sh)
        } else {
            (sw, sw / aspect)
        }
    }

    pub fn eye_pose(&self, pose: &Pose) -> Pose {
        pose.offset_depth(self.eye_offset)
    }

    /// Eye-frame corners of the magnified content, top-left first, clockwise.
    pub fn content_corners(&self, pose: &Pose) -> [Vector3<f64>; 4] {
        let eye = self.eye_pose(pose);
        let m = self.display.magnification;
        let (cw, ch) = self.content_size();
        let (x, y) = (m * cw / 2.0, m * ch / 2.0);
        [[-x, y], [x, y], [x, -y], [-x, -y]].map(|[a, b]| eye.from_phone_coords(&Vector3::new(a, b, 0.0)))
    }

    /// Scales the hand about the screen centre by the phone magnification
    /// so that it stays registered with the enlarged phone.
    pub fn magnify_mesh(&self, mesh: &HandMesh, pose: &Pose) -> HandMesh {
        let c = self.eye_pose(pose).translation;
        let m = self.display.magnification;
        let mut out = mesh.clone();
        for v in &mut out.vertices {
            let p = c + (Vector3::from(*v) - c) * m;
            *v = [p.x, p.y, p.z];
        }
        out
    }

    /// `screen` is the scaled app frame. The hand, if given, is a mesh from
    /// the same camera together with its colour texture.
    pub fn compose(&self, pose: &Pose, screen: &ColorImage, hand: Option<(&HandMesh, &ColorImage)>) -> Composite {
        let k = self.intrinsics;
        let (w, h) = (k.width, k.height);
        let eye = self.eye_pose(pose);
        let n = eye.normal();
        let c = eye.translation;
        let rt = eye.rotation.transpose();
        let m = self.display.magnification;
        let (cw, ch) = self.content_size();
        let (hw, hh) = (self.geometry.screen_width / 2.0, self.geometry.screen_height / 2.0);
        let (tw, th) = (screen.width as f64, screen.height as f64);
        let nc = n.dot(&c);

        let hand_layer = hand.map(|(mesh, tex)| {
            let mag = self.magnify_mesh(mesh, pose);
            rasterize_projected_depth(&mag, tex, &k)
        });

        let mut img = ColorImage::new(w, h, BACKGROUND);
        let (mut screen_pixels, mut hand_pixels) = (0, 0);
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                let r = k.ray(x as f64, y as f64);
                let denom = n.dot(&r);
                let t = if denom.abs() > 1e-12 { nc / denom } else { -1.0 };
                let mut phone: Option<(f64, Rgb)> = None;
                if t > 0.0 {
                    let q = rt * (r * t - c) / m;
                    if q.x.abs() <= hw && q.y.abs() <= hh {
                        let u = (q.x + cw / 2.0) / cw;
                        let v = (ch / 2.0 - q.y) / ch;
                        let color = if (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v) {
                            let tx = ((u * tw - 0.5).round().max(0.0) as u32).min(screen.width - 1);
                            let ty = ((v * th - 0.5).round().max(0.0) as u32).min(screen.height - 1);
                            screen.get(tx, ty)
                        } else {
                            BEZEL
                        };
                        phone = Some((t, color));
                    }
                }
                let hand_px = hand_layer
                    .as_ref()
                    .filter(|(_, cover, _)| cover.bits[i])
                    .map(|(himg, _, z)| (z[i], himg.data[i]));
                let out = match (phone, hand_px) {
                    (Some((pz, _)), Some((hz, hc))) if hz < pz => {
                        hand_pixels += 1;
                        hc
                    }
                    (None, Some((_, hc))) => {
                        hand_pixels += 1;
                        hc
                    }
                    (Some((_, pc)), _) => {
                        screen_pixels += 1;
                        pc
                    }
                    (None, None) => BACKGROUND,
                };
                img.data[i] = out;
            }
        }
        Composite {
            image: img,
            screen_pixels,
            hand_pixels,
        }
    }
}
