use serde::{Deserialize, Serialize};

/// Affine IO-phone → app mapping that letterboxes the app inside the IO
/// screen while preserving its aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TouchMapping {
    pub scale: f64,
    pub offset_x: f64,
    pub offset_y: f64,
}

impl TouchMapping {
    pub fn identity(_w: u32, _h: u32) -> Self {
        TouchMapping {
            scale: 1.0,
            offset_x: 0.0,
            offset_y: 0.0,
        }
    }

    pub fn letterbox(io_width: f64, io_height: f64, app_width: u32, app_height: u32) -> Self {
        let scale = (io_width / app_width as f64).min(io_height / app_height as f64);
        TouchMapping {
            scale,
            offset_x: (io_width - app_width as f64 * scale) / 2.0,
            offset_y: (io_height - app_height as f64 * scale) / 2.0,
        }
    }

    pub fn to_app(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.offset_x) / self.scale, (y - self.offset_y) / self.scale)
    }

    pub fn to_io(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale + self.offset_x, y * self.scale + self.offset_y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wider_io_screen_pillarboxes() {
        let m = TouchMapping::letterbox(1440.0, 1920.0, 1080, 1920);
        assert_eq!(m.scale, 1.0);
        assert_eq!(m.offset_x, 180.0);
        assert_eq!(m.to_app(180.0, 0.0), (0.0, 0.0));
        assert_eq!(m.to_app(1260.0, 1920.0), (1080.0, 1920.0));
    }

    #[test]
    fn smaller_io_screen_scales() {
        let m = TouchMapping::letterbox(720.0, 1280.0, 1080, 1920);
        assert!((m.scale - 2.0 / 3.0).abs() < 1e-12);
        let (x, y) = m.to_app(360.0, 640.0);
        assert!((x - 540.0).abs() < 1e-9 && (y - 960.0).abs() < 1e-9);
        let (a, b) = m.to_io(x, y);
        assert!((a - 360.0).abs() < 1e-9 && (b - 640.0).abs() < 1e-9);
    }
}
