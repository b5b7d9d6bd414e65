use nalgebra::Vector3;

use crate::geom::{self, Point2};
use crate::model::{CameraIntrinsics, PhoneGeometry, Pose};
use crate::{Error, Result};

/// Projects the screen rectangle into the image and clips it to the image
/// bounds (pixel centres span `[0, w-1] × [0, h-1]`). Corner order follows
/// the screen: top-left first, clockwise as seen by the viewer.
pub fn project_screen_border(
    pose: &Pose,
    geometry: &PhoneGeometry,
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<Point2>> {
    let mut poly = Vec::with_capacity(4);
    for c in geometry.screen_corners() {
        let p = pose.from_phone_coords(&Vector3::new(c[0], c[1], 0.0));
        let uv = intrinsics
            .project(&p)
            .ok_or_else(|| Error::Geometry("screen corner behind the camera".into()))?;
        poly.push(uv);
    }
    Ok(geom::clip_to_rect(
        &poly,
        0.0,
        0.0,
        intrinsics.width as f64 - 1.0,
        intrinsics.height as f64 - 1.0,
    ))
}
