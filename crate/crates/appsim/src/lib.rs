//! Scripted stand-in for the emulated Android app. It turns touch events
//! into deterministic screen states and provides the stage-delay hook used
//! to reproduce latency scenarios.

mod app;
mod chart;
pub mod font;
mod latency;
mod mapping;
mod scenario;

pub use app::{
    fill_rect, AppKind, AppScreen, AppState, Rect, TapRecord, TouchOutcome, Widget, RENDER_HEIGHT,
    RENDER_WIDTH, STIMULUS_CENTRE_Y, STIMULUS_COLOR,
};
pub use chart::{render_chart, sp_to_px, ChartRow, PX_PER_SP};
pub use latency::{synthesize_latency, wait_until, LatencyPolicy, Stage, StageDelays};
pub use mapping::TouchMapping;
pub use scenario::{Scenario, ScreenSize};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
