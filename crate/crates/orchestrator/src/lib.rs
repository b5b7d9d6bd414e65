//! Three-tier split-interaction pipeline: an IO agent replays touches, the
//! orchestrator drives the app and the hand path, and a sink displays
//! impaired frames and acknowledges them for latency attribution.

pub mod agent;
pub mod api;
pub mod bench;
pub mod clock;
pub mod compose;
pub mod config;
mod error;
pub mod handpath;
pub mod link;
pub mod live;
pub mod offline;
pub mod profile;
pub mod relay;
pub mod report;
pub mod sink;

use std::path::Path;

pub use config::{Mode, PipelineConfig, Ports};
pub use error::{Error, Result};
pub use live::{run_live, HandFeed, LiveEngine, LiveOptions};
pub use offline::run_offline;
pub use report::{LatencyReport, Recorder};

/// Renders the scenes described by a scene config file into `out`,
/// returning the number of frames written.
pub fn scenegen(config: &Path, out: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
    let cfg: empathd_core::scenegen::SceneConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
    let specs = cfg.specs();
    if specs.is_empty() {
        return Err(Error::Config(format!("{} describes no scenes", config.display())));
    }
    empathd_core::scenegen::render_sequence(&specs, out)?;
    Ok(specs.len())
}
