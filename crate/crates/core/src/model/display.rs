use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Resolution of the streamed app screen and the size of the virtual phone
/// relative to the physical one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VirtualDisplayConfig {
    pub stream_width: u32,
    pub stream_height: u32,
    pub magnification: f64,
}

impl Default for VirtualDisplayConfig {
    fn default() -> Self {
        VirtualDisplayConfig {
            stream_width: 485,
            stream_height: 863,
            magnification: 1.5,
        }
    }
}

impl VirtualDisplayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stream_width == 0 || self.stream_height == 0 {
            return Err(Error::Config("stream dimensions must be non-zero".into()));
        }
        let aspect = self.stream_width as f64 / self.stream_height as f64;
        let target = 9.0 / 16.0;
        if ((aspect - target) / target).abs() > 0.01 {
            return Err(Error::Config(format!(
                "stream aspect {}x{} is not within 1% of 9:16",
                self.stream_width, self.stream_height
            )));
        }
        if !(self.magnification >= 1.0) {
            return Err(Error::Config(format!(
                "magnification {} must be at least 1",
                self.magnification
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        VirtualDisplayConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_wrong_aspect_and_shrinking() {
        let mut c = VirtualDisplayConfig::default();
        c.stream_width = 600;
        assert!(c.validate().is_err());
        let mut c = VirtualDisplayConfig::default();
        c.magnification = 0.9;
        assert!(c.validate().is_err());
    }
}
