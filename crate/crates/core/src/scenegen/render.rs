use std::collections::BTreeMap;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HandSpec;
use crate::geom::{self, Point2};
use crate::model::{
    CameraIntrinsics, ColorImage, DepthImage, InkLookup, PhoneGeometry, Pose, Rgb, RgbdFrame,
    SegmentMask,
};
use crate::{Error, Result};

pub const CYAN: Rgb = [0.0, 1.0, 1.0];
pub const INK_BLUE: Rgb = [0.0, 0.0, 1.0];

fn default_background() -> Rgb {
    // Blue-grey desk: colour score 0.65, so edge pixels blending it with the
    // screen (at least 25% screen coverage) stay below the default threshold.
    [0.30, 0.32, 0.50]
}

fn default_background_depth() -> f64 {
    1.2
}

fn default_supersample() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderOptions {
    /// Invalidate depth (0) on visible screen pixels, mimicking a glossy
    /// display that the depth sensor cannot measure.
    #[serde(default)]
    pub glossy_screen: bool,
    /// Standard deviation of additive Gaussian depth noise, metres.
    #[serde(default)]
    pub depth_noise_sigma: f64,
    #[serde(default)]
    pub noise_seed: u64,
    /// Depth of the backdrop; 0 leaves it invalid.
    #[serde(default = "default_background_depth")]
    pub background_depth: f64,
    /// Colour supersampling factor per axis along surface edges.
    #[serde(default = "default_supersample")]
    pub supersample: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            glossy_screen: false,
            depth_noise_sigma: 0.0,
            noise_seed: 0,
            background_depth: default_background_depth(),
            supersample: default_supersample(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneSpec {
    pub phone_pose: Pose,
    #[serde(default)]
    pub phone_geometry: PhoneGeometry,
    #[serde(default)]
    pub hand_spec: Option<HandSpec>,
    #[serde(default)]
    pub intrinsics: CameraIntrinsics,
    #[serde(default = "default_background")]
    pub background_color: Rgb,
    #[serde(default)]
    pub options: RenderOptions,
}

impl SceneSpec {
    pub fn new(phone_pose: Pose) -> Self {
        SceneSpec {
            phone_pose,
            phone_geometry: PhoneGeometry::default(),
            hand_spec: None,
            intrinsics: CameraIntrinsics::default(),
            background_color: default_background(),
            options: RenderOptions::default(),
        }
    }

    pub fn with_hand(mut self, hand: HandSpec) -> Self {
        self.hand_spec = Some(hand);
        self
    }

    pub fn glossy(mut self) -> Self {
        self.options.glossy_screen = true;
        self
    }
}

/// What the renderer knows exactly about the frame it drew.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub pose: Pose,
    pub hand_mask: SegmentMask,
    /// Projected marker corners, canonical order (top-left first, clockwise).
    pub marker_corners_px: BTreeMap<u32, [Point2; 4]>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Surface {
    Background,
    Screen,
    Ink,
    Hand,
}

struct Hit {
    surface: Surface,
    /// Camera-frame z of the hit (0 for background).
    depth: f64,
    /// Phone-frame coordinates of the hit on its plane.
    q: Point2,
}

struct Tracer<'a> {
    spec: &'a SceneSpec,
    ink: InkLookup,
    normal: Vector3<f64>,
    n_dot_t: f64,
    half_w: f64,
    half_h: f64,
}

impl<'a> Tracer<'a> {
    fn new(spec: &'a SceneSpec) -> Self {
        let pose = &spec.phone_pose;
        let normal = pose.normal();
        Tracer {
            spec,
            ink: spec.phone_geometry.ink_lookup(),
            normal,
            n_dot_t: normal.dot(&pose.translation),
            half_w: spec.phone_geometry.screen_width / 2.0,
            half_h: spec.phone_geometry.screen_height / 2.0,
        }
    }

    /// Intersects the ray through `(u, v)` with the plane at height `h`
    /// above the screen. Returns camera-z and phone-frame (x, y).
    #[inline]
    fn plane_hit(&self, ray: &Vector3<f64>, h: f64) -> Option<(f64, Point2)> {
        let denom = self.normal.dot(ray);
        if denom.abs() < 1e-12 {
            return None;
        }
        let s = (self.n_dot_t + h) / denom;
        if s <= 0.0 {
            return None;
        }
        let q = self.spec.phone_pose.to_phone_coords(&(ray * s));
        Some((s, [q.x, q.y]))
    }

    fn trace(&self, u: f64, v: f64) -> Hit {
        let ray = self.spec.intrinsics.ray(u, v);
        let screen = self
            .plane_hit(&ray, 0.0)
            .filter(|(_, q)| q[0].abs() <= self.half_w && q[1].abs() <= self.half_h);
        if let Some(hand) = &self.spec.hand_spec {
            if let Some((s, q)) = self.plane_hit(&ray, hand.hover_height) {
                let nearer = screen.map_or(true, |(ss, _)| s <= ss);
                if nearer && geom::in_polygon(&hand.outline, q) {
                    return Hit {
                        surface: Surface::Hand,
                        depth: s,
                        q,
                    };
                }
            }
        }
        match screen {
            Some((s, q)) => Hit {
                surface: if self.ink.is_ink(q) {
                    Surface::Ink
                } else {
                    Surface::Screen
                },
                depth: s,
                q,
            },
            None => Hit {
                surface: Surface::Background,
                depth: 0.0,
                q: [0.0, 0.0],
            },
        }
    }

    fn color(&self, hit: &Hit) -> Rgb {
        match hit.surface {
            Surface::Background => self.spec.background_color,
            Surface::Screen => CYAN,
            Surface::Ink => INK_BLUE,
            Surface::Hand => self
                .spec
                .hand_spec
                .as_ref()
                .expect("hand hit implies hand spec")
                .color_at(hit.q),
        }
    }
}

fn check_visible(spec: &SceneSpec) -> Result<()> {
    let pose = &spec.phone_pose;
    pose.validate()?;
    spec.intrinsics.validate()?;
    spec.phone_geometry.validate()?;
    if pose.translation.z <= 0.0 {
        return Err(Error::Geometry(format!(
            "phone centre is behind the camera (z = {})",
            pose.translation.z
        )));
    }
    if let Some(h) = &spec.hand_spec {
        if !(h.hover_height >= 0.0) {
            return Err(Error::Config("hand hover height must be non-negative".into()));
        }
        if !geom::is_simple_polygon(&h.outline) {
            return Err(Error::Config("hand outline must be a simple polygon".into()));
        }
    }
    let mut pts = Vec::with_capacity(4);
    for c in spec.phone_geometry.screen_corners() {
        let p = pose.from_phone_coords(&Vector3::new(c[0], c[1], 0.0));
        match spec.intrinsics.project(&p) {
            Some(uv) => pts.push(uv),
            None => {
                return Err(Error::Geometry(
                    "screen corner behind the camera".into(),
                ))
            }
        }
    }
    if geom::signed_area(&pts).abs() < 1.0 {
        return Err(Error::Geometry("screen projects to zero area".into()));
    }
    Ok(())
}

/// Renders one RGB-D frame and its ground truth.
pub fn render(spec: &SceneSpec) -> Result<(RgbdFrame, GroundTruth)> {
    check_visible(spec)?;
    let k = spec.intrinsics;
    let (w, h) = (k.width as usize, k.height as usize);
    let tracer = Tracer::new(spec);
    let ss = spec.options.supersample.max(1);

    // Surface class at pixel corners, shared between neighbouring pixels.
    let corners: Vec<Surface> = (0..(h + 1) * (w + 1))
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % (w + 1), i / (w + 1));
            tracer.trace(x as f64 - 0.5, y as f64 - 0.5).surface
        })
        .collect();

    let noise = Normal::new(0.0, spec.options.depth_noise_sigma.max(0.0))
        .map_err(|e| Error::Config(e.to_string()))?;

    let rows: Vec<(Vec<Rgb>, Vec<f64>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.options.noise_seed ^ (y as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut colors = Vec::with_capacity(w);
            let mut depths = Vec::with_capacity(w);
            let mut mask = Vec::with_capacity(w);
            for x in 0..w {
                let centre = tracer.trace(x as f64, y as f64);
                let c = [
                    corners[y * (w + 1) + x],
                    corners[y * (w + 1) + x + 1],
                    corners[(y + 1) * (w + 1) + x],
                    corners[(y + 1) * (w + 1) + x + 1],
                ];
                let uniform = c.iter().all(|s| *s == centre.surface);
                let color = if uniform || ss == 1 {
                    tracer.color(&centre)
                } else {
                    let mut acc = [0.0f32; 3];
                    for sy in 0..ss {
                        for sx in 0..ss {
                            let u = x as f64 - 0.5 + (sx as f64 + 0.5) / ss as f64;
                            let v = y as f64 - 0.5 + (sy as f64 + 0.5) / ss as f64;
                            let col = tracer.color(&tracer.trace(u, v));
                            for ch in 0..3 {
                                acc[ch] += col[ch];
                            }
                        }
                    }
                    let n = (ss * ss) as f32;
                    [acc[0] / n, acc[1] / n, acc[2] / n]
                };
                colors.push(color);

                let mut d = match centre.surface {
                    Surface::Background => spec.options.background_depth,
                    Surface::Screen | Surface::Ink if spec.options.glossy_screen => 0.0,
                    _ => centre.depth,
                };
                if d > 0.0 && spec.options.depth_noise_sigma > 0.0 {
                    d = (d + noise.sample(&mut rng)).max(0.0);
                }
                depths.push(d);
                mask.push(centre.surface == Surface::Hand);
            }
            (colors, depths, mask)
        })
        .collect();

    let mut color = ColorImage::new(k.width, k.height, [0.0; 3]);
    let mut depth = DepthImage::new(k.width, k.height);
    let mut hand_mask = SegmentMask::new(k.width, k.height);
    for (y, (c, d, m)) in rows.into_iter().enumerate() {
        color.data[y * w..(y + 1) * w].copy_from_slice(&c);
        depth.data[y * w..(y + 1) * w].copy_from_slice(&d);
        hand_mask.bits[y * w..(y + 1) * w].copy_from_slice(&m);
    }
    color.quantize();
    depth.quantize();

    let mut marker_corners_px = BTreeMap::new();
    for m in &spec.phone_geometry.marker_layout {
        let mut px = [[0.0; 2]; 4];
        let mut visible = true;
        for (i, c) in m.corners.iter().enumerate() {
            let p = spec.phone_pose.from_phone_coords(&Vector3::new(c[0], c[1], 0.0));
            match k.project(&p) {
                Some(uv) => px[i] = uv,
                None => visible = false,
            }
        }
        if visible {
            marker_corners_px.insert(m.marker_id, px);
        }
    }

    let frame = RgbdFrame {
        intrinsics: k,
        color,
        depth,
        timestamp: 0,
    };
    let truth = GroundTruth {
        pose: spec.phone_pose,
        hand_mask,
        marker_corners_px,
    };
    Ok((frame, truth))
}
