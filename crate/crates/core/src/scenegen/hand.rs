use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::model::Rgb;

fn default_skin() -> Rgb {
    [0.80, 0.40, 0.38]
}

/// Flat hand silhouette floating parallel to the screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HandSpec {
    /// Simple polygon in phone coordinates, metres.
    pub outline: Vec<Point2>,
    /// Height above the screen plane along the screen normal, metres.
    pub hover_height: f64,
    #[serde(default = "default_skin")]
    pub skin_color: Rgb,
    /// Relative amplitude of a procedural skin texture; 0 renders flat.
    #[serde(default)]
    pub texture_amplitude: f32,
}

impl HandSpec {
    pub fn new(outline: Vec<Point2>, hover_height: f64) -> Self {
        HandSpec {
            outline,
            hover_height,
            skin_color: default_skin(),
            texture_amplitude: 0.0,
        }
    }

    /// Stylised open hand (palm, four fingers and a thumb) whose fingertips
    /// point along `angle` (radians from phone +y), scaled by `scale`
    /// (1.0 ≈ adult hand, ~9 cm palm-to-fingertip) and anchored at the
    /// palm centre `centre`.
    pub fn open_hand(centre: Point2, scale: f64, angle: f64, hover_height: f64) -> Self {
        // Outline in hand units (cm), palm centred at the origin, fingers up.
        #[rustfmt::skip]
        let cm: [Point2; 28] = [
            [-3.6, -3.2], [3.4, -3.2], [3.6, 1.0],
            // thumb on the right, angled outwards
            [5.6, 2.6], [6.2, 3.6], [5.6, 4.2], [3.0, 2.8],
            // little finger .. index finger, right to left
            [2.9, 4.6], [2.7, 7.0], [1.6, 7.0], [1.5, 3.5],
            [1.3, 3.5], [1.2, 8.2], [0.0, 8.2], [-0.1, 3.5],
            [-0.3, 3.5], [-0.4, 8.0], [-1.6, 8.0], [-1.7, 3.5],
            [-1.9, 3.5], [-2.0, 7.2], [-3.1, 7.2], [-3.2, 3.5],
            [-3.4, 3.2], [-3.6, 1.5], [-3.7, 0.0], [-3.7, -1.5], [-3.65, -2.5],
        ];
        let (s, c) = angle.sin_cos();
        let outline = cm
            .iter()
            .map(|p| {
                let x = p[0] * 0.01 * scale;
                let y = p[1] * 0.01 * scale;
                // Rotate counter-clockwise by `angle` in the phone plane.
                [centre[0] + c * x - s * y, centre[1] + s * x + c * y]
            })
            .collect();
        HandSpec::new(outline, hover_height)
    }

    pub fn with_texture(mut self, amplitude: f32) -> Self {
        self.texture_amplitude = amplitude;
        self
    }

    /// Skin colour at phone-frame point `q` on the hand plane.
    pub(crate) fn color_at(&self, q: Point2) -> Rgb {
        if self.texture_amplitude == 0.0 {
            return self.skin_color;
        }
        let tau = std::f64::consts::TAU;
        let pattern = ((tau * q[0] / 0.009).sin() * (tau * q[1] / 0.013).sin()
            + 0.5 * (tau * (q[0] + q[1]) / 0.021).sin())
            / 1.5;
        let k = 1.0 + self.texture_amplitude * pattern as f32;
        let [r, g, b] = self.skin_color;
        [
            (r * k).clamp(0.0, 1.0),
            (g * k).clamp(0.0, 1.0),
            (b * k).clamp(0.0, 1.0),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom;

    #[test]
    fn open_hand_is_simple_and_concave() {
        for angle in [0.0, 0.7, -1.2, 3.0] {
            let h = HandSpec::open_hand([0.01, -0.02], 0.8, angle, 0.01);
            assert!(geom::is_simple_polygon(&h.outline));
            assert!(!geom::is_convex(&h.outline));
        }
    }
}
