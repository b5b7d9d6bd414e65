use empathd_core::{ColorImage, Rgb};
use font8x8::{UnicodeFonts, BASIC_FONTS};

/// Glyph cell edge in font units.
pub const GLYPH: u32 = 8;

fn glyph(c: char) -> [u8; 8] {
    BASIC_FONTS.get(c).unwrap_or([0; 8])
}

/// Width and height in pixels of `text` drawn at integer `scale`.
pub fn text_size(text: &str, scale: u32) -> (u32, u32) {
    (text.chars().count() as u32 * GLYPH * scale, GLYPH * scale)
}

/// Draws `text` with its top-left corner at `(x, y)`; pixels outside the
/// image are clipped.
pub fn draw_text(img: &mut ColorImage, text: &str, x: i64, y: i64, scale: u32, color: Rgb) {
    let s = scale.max(1) as i64;
    for (i, c) in text.chars().enumerate() {
        let g = glyph(c);
        let gx = x + i as i64 * GLYPH as i64 * s;
        for (row, bits) in g.iter().enumerate() {
            for col in 0..8 {
                if bits >> col & 1 == 0 {
                    continue;
                }
                for dy in 0..s {
                    for dx in 0..s {
                        let px = gx + col * s + dx;
                        let py = y + row as i64 * s + dy;
                        if px >= 0 && py >= 0 && px < img.width as i64 && py < img.height as i64 {
                            img.set(px as u32, py as u32, color);
                        }
                    }
                }
            }
        }
    }
}

/// Draws `text` centred on `(cx, cy)`.
pub fn draw_text_centred(img: &mut ColorImage, text: &str, cx: i64, cy: i64, scale: u32, color: Rgb) {
    let (w, h) = text_size(text, scale);
    draw_text(img, text, cx - w as i64 / 2, cy - h as i64 / 2, scale, color);
}

/// Rows `[top, bottom]` holding ink of `color` inside the column band
/// `[x0, x1)`, if any.
pub fn ink_rows(img: &ColorImage, x0: u32, x1: u32, color: Rgb) -> Option<(u32, u32)> {
    let rows: Vec<u32> = (0..img.height)
        .filter(|&y| (x0..x1.min(img.width)).any(|x| img.get(x, y) == color))
        .collect();
    Some((*rows.first()?, *rows.last()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyph_height_scales_linearly() {
        for scale in [1, 3, 7] {
            let mut img = ColorImage::new(200, 100, [1.0; 3]);
            draw_text(&mut img, "E", 10, 10, scale, [0.0; 3]);
            let (top, bottom) = ink_rows(&img, 0, 200, [0.0; 3]).unwrap();
            assert_eq!(bottom - top + 1, 7 * scale);
        }
    }

    #[test]
    fn unknown_characters_draw_nothing() {
        let mut img = ColorImage::new(40, 20, [1.0; 3]);
        draw_text(&mut img, "\u{2603}", 0, 0, 2, [0.0; 3]);
        assert!(img.data.iter().all(|p| *p == [1.0; 3]));
    }

    #[test]
    fn clipping_at_edges() {
        let mut img = ColorImage::new(10, 10, [1.0; 3]);
        draw_text(&mut img, "88", -5, -5, 2, [0.0; 3]);
        draw_text(&mut img, "88", 8, 8, 2, [0.0; 3]);
    }
}
