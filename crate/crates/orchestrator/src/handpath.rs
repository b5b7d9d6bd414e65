use std::time::{Duration, Instant};

use empathd_appsim::{LatencyPolicy, Stage};
use empathd_core::meshgen::{build_mesh, HandMesh, MeshParams};
use empathd_core::segmenter::{segment, DEFAULT_TAU};
use empathd_core::tracker::{detect_markers, estimate_pose};
use empathd_core::{PhoneGeometry, Pose, RgbdFrame, RoiBox};
use nalgebra::{Rotation3, UnitQuaternion};

use crate::Result;

/// Poses whose corner re-projection error exceeds this are treated as
/// tracking failures.
pub const MAX_RESIDUAL_PX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseSource {
    Tracked,
    /// Tracking failed; the previous pose was reused.
    Reused,
}

#[derive(Debug, Clone)]
pub struct HandOutput {
    pub pose: Pose,
    pub source: PoseSource,
    pub mesh: HandMesh,
    pub phone_tracking: Duration,
    pub hand_tracking: Duration,
    pub mesh_build: Duration,
}

/// Phone tracking, hand segmentation and meshing for one camera stream.
#[derive(Debug, Clone)]
pub struct HandTracker {
    pub geometry: PhoneGeometry,
    pub roi: RoiBox,
    pub mesh: MeshParams,
    pub tau: f64,
    pub smoothing: Option<f64>,
    last_pose: Option<Pose>,
}

impl HandTracker {
    pub fn new(mesh: MeshParams) -> Self {
        HandTracker {
            geometry: PhoneGeometry::default(),
            roi: RoiBox::default(),
            mesh,
            tau: DEFAULT_TAU,
            smoothing: None,
            last_pose: None,
        }
    }

    pub fn last_pose(&self) -> Option<&Pose> {
        self.last_pose.as_ref()
    }

    /// Tracks the phone, falling back to the last pose. `None` when there
    /// has never been a pose.
    pub fn track(&mut self, frame: &RgbdFrame) -> Option<(Pose, PoseSource)> {
        match self.measure(frame) {
            Some(p) => {
                let p = match (self.smoothing, &self.last_pose) {
                    (Some(a), Some(prev)) => smooth(prev, &p, a),
                    _ => p,
                };
                self.last_pose = Some(p);
                Some((p, PoseSource::Tracked))
            }
            None => self.last_pose.map(|p| (p, PoseSource::Reused)),
        }
    }

    fn measure(&self, frame: &RgbdFrame) -> Option<Pose> {
        let dets = detect_markers(&frame.color, &self.geometry);
        match estimate_pose(&dets, &self.geometry, &frame.intrinsics) {
            Ok(est) if est.rms_residual_px <= MAX_RESIDUAL_PX => Some(est.pose),
            Ok(est) => {
                log::debug!("pose rejected: residual {:.2} px", est.rms_residual_px);
                None
            }
            Err(e) => {
                log::debug!("pose estimation failed: {e}");
                None
            }
        }
    }

    /// Full per-frame path with stage padding. `Ok(None)` means the frame
    /// was skipped for want of any pose.
    pub fn process(&mut self, frame: &RgbdFrame, policy: &LatencyPolicy) -> Result<Option<HandOutput>> {
        let t0 = Instant::now();
        let tracked = self.track(frame);
        let phone_tracking = policy.pad(Stage::PhoneTracking, t0);
        let Some((pose, source)) = tracked else {
            return Ok(None);
        };
        let t1 = Instant::now();
        let mask = segment(frame, &pose, &self.geometry, &self.roi, self.tau);
        let tm = Instant::now();
        let mut mesh = build_mesh(frame, &mask, &self.mesh, Some((&pose, &self.roi)))?;
        mesh.source_frame_id = frame.timestamp;
        let mesh_build = tm.elapsed();
        let hand_tracking = policy.pad(Stage::HandTracking, t1);
        Ok(Some(HandOutput {
            pose,
            source,
            mesh,
            phone_tracking,
            hand_tracking,
            mesh_build,
        }))
    }
}

/// Moves `prev` towards `next` by factor `a` (1 = no smoothing).
pub fn smooth(prev: &Pose, next: &Pose, a: f64) -> Pose {
    let q0 = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(prev.rotation));
    let q1 = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(next.rotation));
    let q = q0.slerp(&q1, a);
    Pose {
        translation: prev.translation + (next.translation - prev.translation) * a,
        rotation: q.to_rotation_matrix().into_inner(),
    }
}
