//! Canned scene families used by tests, benchmarks and the CLI.

use nalgebra::Vector3;

use super::{HandSpec, SceneSpec};
use crate::model::Pose;

/// Where the hand sits relative to the screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandPlacement {
    OverScreen,
    OffScreen,
    Straddling,
}

impl HandPlacement {
    pub const ALL: [HandPlacement; 3] = [
        HandPlacement::OverScreen,
        HandPlacement::OffScreen,
        HandPlacement::Straddling,
    ];

    /// Hand silhouette for this placement; `phase` in `[0, 1)` varies it.
    pub fn hand(self, phase: f64) -> HandSpec {
        let wobble = (phase * std::f64::consts::TAU).sin();
        let hover = 0.006 + 0.008 * phase;
        match self {
            HandPlacement::OverScreen => {
                HandSpec::open_hand([-0.006 + 0.004 * wobble, -0.03 + 0.01 * wobble], 0.5, 0.15 * wobble, hover)
            }
            HandPlacement::OffScreen => {
                HandSpec::open_hand([0.061, -0.02 + 0.02 * wobble], 0.42, 0.1 * wobble, hover)
            }
            HandPlacement::Straddling => {
                HandSpec::open_hand([0.03, -0.035 + 0.01 * wobble], 0.75, 0.3 + 0.2 * wobble, hover)
            }
        }
    }
}

/// `n` glossy-screen frames cycling through the three hand placements with
/// varied phone poses.
pub fn segmentation_suite(n: usize) -> Vec<SceneSpec> {
    (0..n)
        .map(|i| {
            let placement = HandPlacement::ALL[i % 3];
            let phase = i as f64 / n as f64;
            let yaw = (-20.0 + 40.0 * phase).to_radians();
            let pitch = (8.0 * (phase * 5.0).cos()).to_radians();
            let pose = Pose::looking_at_phone(
                Vector3::new(0.005 * (phase * 7.0).sin(), 0.01 * (phase * 3.0).cos(), 0.28 + 0.08 * phase),
                yaw,
                pitch,
                0.05,
            );
            SceneSpec::new(pose)
                .with_hand(placement.hand(phase).with_texture(0.15))
                .glossy()
        })
        .collect()
}

/// Hand-over-screen scene for mesh quality experiments.
pub fn textured_hand_scene() -> SceneSpec {
    SceneSpec::new(Pose::looking_at_phone(Vector3::new(0.0, 0.0, 0.3), 0.15, 0.1, 0.0))
        .with_hand(HandSpec::open_hand([0.01, -0.02], 0.9, 0.25, 0.01).with_texture(0.15))
        .glossy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PhoneGeometry, RoiBox};

    #[test]
    fn hands_stay_inside_the_roi_footprint() {
        let g = PhoneGeometry::default();
        let roi = RoiBox::default();
        for p in HandPlacement::ALL {
            for k in 0..10 {
                let h = p.hand(k as f64 / 10.0);
                assert!(h.hover_height <= roi.depth_extent);
                for q in &h.outline {
                    assert!(q[0].abs() < g.screen_width / 2.0 + roi.planar_margin - 0.002, "{p:?} {q:?}");
                    assert!(q[1].abs() < g.screen_height / 2.0 + roi.planar_margin - 0.002, "{p:?} {q:?}");
                }
                if p == HandPlacement::OverScreen {
                    assert!(h.outline.iter().all(|q| q[0].abs() < g.screen_width / 2.0 && q[1].abs() < g.screen_height / 2.0));
                }
                if p == HandPlacement::OffScreen {
                    assert!(h.outline.iter().all(|q| q[0] > g.screen_width / 2.0));
                }
            }
        }
    }
}
