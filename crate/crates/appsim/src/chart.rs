use empathd_core::ColorImage;
use serde::Serialize;

use crate::app::{RENDER_HEIGHT, RENDER_WIDTH};
use crate::font::{draw_text, text_size, GLYPH};

/// Pixels per scale-independent pixel on the simulated 1080×1920 phone.
pub const PX_PER_SP: f64 = 2.75;

const LETTERS: &[u8] = b"EFPTOZLDC";
/// Row sizes relative to the requested font size, largest first.
const ROW_FACTORS: [f64; 7] = [4.0, 3.0, 2.0, 1.5, 1.0, 0.75, 0.5];

pub fn sp_to_px(sp: f64) -> f64 {
    sp * PX_PER_SP
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChartRow {
    pub sp: f64,
    pub scale: u32,
    pub top: u32,
    /// Glyph cell height in pixels.
    pub cell_px: u32,
    pub text: String,
}

/// Snellen-style chart: rows of letters shrinking from four times to half
/// of `font_sp`, black on white.
pub fn render_chart(font_sp: f64) -> (ColorImage, Vec<ChartRow>) {
    let mut img = ColorImage::new(RENDER_WIDTH, RENDER_HEIGHT, [1.0; 3]);
    let mut rows = Vec::new();
    let mut y = 60u32;
    let mut k = 0usize;
    for f in ROW_FACTORS {
        let sp = font_sp * f;
        let scale = (sp_to_px(sp) / GLYPH as f64).round().max(1.0) as u32;
        let (_, h) = text_size("E", scale);
        if y + h > RENDER_HEIGHT - 40 {
            break;
        }
        let per_row = ((RENDER_WIDTH - 80) / (GLYPH * scale * 2)).clamp(1, 8) as usize;
        let text: String = (0..per_row)
            .map(|i| {
                let c = LETTERS[(k * 7 + i * 5) % LETTERS.len()] as char;
                if i + 1 < per_row {
                    format!("{c} ")
                } else {
                    c.to_string()
                }
            })
            .collect();
        let (w, _) = text_size(&text, scale);
        draw_text(&mut img, &text, (RENDER_WIDTH as i64 - w as i64) / 2, y as i64, scale, [0.0; 3]);
        rows.push(ChartRow {
            sp,
            scale,
            top: y,
            cell_px: h,
            text,
        });
        y += h + h / 2 + 20;
        k += 1;
    }
    (img, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::font::ink_rows;

    #[test]
    fn rows_shrink_and_target_row_matches_sp() {
        let (img, rows) = render_chart(12.0);
        assert!(rows.len() >= 5);
        assert!(rows.windows(2).all(|w| w[0].cell_px >= w[1].cell_px));
        let target = rows.iter().find(|r| r.sp == 12.0).unwrap();
        assert_eq!(target.scale, 4);
        // Measured ink height of the target row: cap height is 7 of 8 rows.
        let band = ColorImage {
            width: img.width,
            height: target.cell_px,
            data: img.data[(target.top * img.width) as usize..((target.top + target.cell_px) * img.width) as usize]
                .to_vec(),
        };
        let (top, bottom) = ink_rows(&band, 0, img.width, [0.0; 3]).unwrap();
        assert_eq!(bottom - top + 1, 7 * target.scale);
    }
}
