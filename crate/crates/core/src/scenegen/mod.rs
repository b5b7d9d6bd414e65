//! Deterministic synthetic RGB-D renderer: a phone showing blue markers on
//! a cyan screen, optionally with a flat hand hovering over or beside it.
//! Every frame comes with exact ground truth (pose, hand mask, marker
//! corners) so it can stand in for a head-mounted camera in tests.

mod hand;
pub mod presets;
mod render;
mod sequence;

pub use hand::HandSpec;
pub use render::{render, GroundTruth, RenderOptions, SceneSpec, CYAN, INK_BLUE};
pub use sequence::{
    orbit_specs, read_truth, render_sequence, OrbitConfig, SceneConfig, TruthRecord, TRUTH_FILE,
};
