//! Domain types shared by every pipeline stage.

mod camera;
mod display;
mod image;
pub mod io;
mod phone;
mod pose;
mod profile;

pub use camera::CameraIntrinsics;
pub use display::VirtualDisplayConfig;
pub use image::{ColorImage, DepthImage, Rgb, RgbdFrame, SegmentMask};
pub use phone::{rotations, InkLookup, MarkerDictionary, MarkerSpec, PhoneGeometry, MARKER_GRID};
pub use pose::{nearest_rotation as pose_nearest_rotation, Pose};
pub use profile::{validate_profile, FilterSpec, ImpairmentProfile, Violation};

use serde::{Deserialize, Serialize};

/// Region of interest around the phone, in metres, within which a hand is
/// tracked by depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoiBox {
    pub planar_margin: f64,
    pub depth_extent: f64,
}

impl Default for RoiBox {
    fn default() -> Self {
        RoiBox {
            planar_margin: 0.06,
            depth_extent: 0.02,
        }
    }
}

impl RoiBox {
    pub fn new(planar_margin: f64, depth_extent: f64) -> crate::Result<Self> {
        if !(planar_margin > 0.0) || !(depth_extent > 0.0) {
            return Err(crate::Error::Config(format!(
                "roi box extents must be strictly positive (margin {planar_margin}, depth {depth_extent})"
            )));
        }
        Ok(RoiBox {
            planar_margin,
            depth_extent,
        })
    }
}
