use std::path::{Path, PathBuf};

use empathd_core::VirtualDisplayConfig;
use serde::{Deserialize, Serialize};

use crate::app::{AppKind, AppScreen, RENDER_HEIGHT, RENDER_WIDTH};
use crate::latency::StageDelays;
use crate::mapping::TouchMapping;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenSize {
    pub width: f64,
    pub height: f64,
}

/// `scenario.json`. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scenario {
    pub app: AppKind,
    #[serde(default)]
    pub stage_delays_ms: StageDelays,
    #[serde(default)]
    pub display_config: VirtualDisplayConfig,
    /// Touch replay (JSON Lines).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// RGB-D sequence directory for the hand path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    /// IO-phone screen size in pixels; defaults to the app render size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub io_screen: Option<ScreenSize>,
}

impl Scenario {
    pub fn new(app: AppKind) -> Self {
        Scenario {
            app,
            stage_delays_ms: StageDelays::default(),
            display_config: VirtualDisplayConfig::default(),
            trace: None,
            seed: 0,
            frames: None,
            io_screen: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut s: Scenario = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut s.trace, &mut s.frames].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.stage_delays_ms.validate()?;
        self.display_config
            .validate()
            .map_err(|e| Error::Config(format!("displayConfig: {e}")))?;
        for (key, p) in [("trace", &self.trace), ("frames", &self.frames)] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::Config(format!("{key}: {} does not exist", p.display())));
                }
            }
        }
        if let Some(s) = self.io_screen {
            if !(s.width > 0.0 && s.height > 0.0) {
                return Err(Error::Config("ioScreen must have positive size".into()));
            }
        }
        Ok(())
    }

    pub fn mapping(&self) -> TouchMapping {
        match self.io_screen {
            Some(s) => TouchMapping::letterbox(s.width, s.height, RENDER_WIDTH, RENDER_HEIGHT),
            None => TouchMapping::identity(RENDER_WIDTH, RENDER_HEIGHT),
        }
    }

    pub fn build_app(&self) -> AppScreen {
        AppScreen::new(self.app, self.seed).with_mapping(self.mapping())
    }
}
