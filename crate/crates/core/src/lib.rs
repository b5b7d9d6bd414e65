//! Core of the split-interaction pipeline: shared domain model, a synthetic
//! RGB-D scene renderer, fiducial phone tracking, hand segmentation, hand
//! meshing and the impairment filters applied at the end of rendering.

pub mod error;
pub mod geom;
pub mod impairments;
pub mod meshgen;
pub mod model;
pub mod scenegen;
pub mod segmenter;
pub mod tracker;

pub use error::{Error, Result};
pub use model::{
    CameraIntrinsics, ColorImage, DepthImage, FilterSpec, ImpairmentProfile, MarkerSpec,
    PhoneGeometry, Pose, Rgb, RgbdFrame, RoiBox, SegmentMask, VirtualDisplayConfig,
};
