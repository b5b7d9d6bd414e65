//! Phone tracking from the on-screen fiducial array: marker detection,
//! planar pose estimation and projection of the screen border.

mod border;
mod detect;
mod pose;

pub use border::project_screen_border;
pub use detect::{blueness, detect_markers, overlay_png, MarkerDetection};
pub use pose::{estimate_pose, reprojection_rms, PoseEstimate};
