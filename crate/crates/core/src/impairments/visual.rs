use serde::{Deserialize, Serialize};

use super::blur::{blur_spans, gaussian_blur};
use crate::model::ColorImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GlaucomaParams {
    pub inner_radius_frac: f64,
    pub outer_radius_frac: f64,
    pub blur_sigma_px: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CataractParams {
    pub blur_sigma_px: f64,
    pub contrast_factor: f64,
}

/// Distance of pixel `(x, y)` from the image centre as a fraction of the
/// half-diagonal.
pub fn radial_fraction(width: u32, height: u32, x: u32, y: u32) -> f64 {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let half_diag = (cx * cx + cy * cy).sqrt().max(f64::MIN_POSITIVE);
    ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() / half_diag
}

/// Weight applied to the blurred image in the ring: 1 at the inner circle
/// falling linearly to 0 at the outer circle.
pub fn vignette_weight(r: f64, inner: f64, outer: f64) -> f64 {
    if r <= inner {
        1.0
    } else if r >= outer {
        0.0
    } else {
        (outer - r) / (outer - inner)
    }
}

/// Clear centre, blurred and darkening ring, black outside.
pub fn apply_glaucoma(img: &ColorImage, p: &GlaucomaParams) -> ColorImage {
    let (w, h) = (img.width, img.height);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let hd = (cx * cx + cy * cy).sqrt().max(f64::MIN_POSITIVE);
    let (inner, outer) = (p.inner_radius_frac, p.outer_radius_frac);
    let inner2 = (inner * hd).powi(2);
    let in_ring = |x: u32, y: u32| {
        let r = radial_fraction(w, h, x, y);
        r > inner && r < outer
    };

    let spans: Vec<Option<(usize, usize)>> = (0..h)
        .map(|y| {
            let dy = y as f64 - cy;
            let reach2 = (outer * hd).powi(2) - dy * dy;
            if reach2 < 0.0 {
                return None;
            }
            let reach = reach2.sqrt();
            let mut x0 = ((cx - reach).floor() - 1.0).max(0.0) as u32;
            let mut x1 = ((cx + reach).ceil() + 1.0).min(w as f64 - 1.0) as u32;
            while x0 <= x1 && !in_ring(x0, y) {
                x0 += 1;
            }
            while x1 > x0 && !in_ring(x1, y) {
                x1 -= 1;
            }
            (x0 <= x1 && in_ring(x0, y)).then_some((x0 as usize, x1 as usize))
        })
        .collect();
    let blurred = blur_spans(img, p.blur_sigma_px, Some(&spans));

    let mut out = img.clone();
    for y in 0..h {
        let dy2 = (y as f64 - cy).powi(2);
        for x in 0..w {
            let d2 = (x as f64 - cx).powi(2) + dy2;
            if d2 <= inner2 {
                continue;
            }
            let k = vignette_weight(d2.sqrt() / hd, inner, outer) as f32;
            let i = img.index(x, y);
            let b = blurred.data[i];
            out.data[i] = [b[0] * k, b[1] * k, b[2] * k];
        }
    }
    out
}

/// Blur followed by contrast compression about mid-grey.
pub fn apply_cataract(img: &ColorImage, p: &CataractParams) -> ColorImage {
    let mut out = gaussian_blur(img, p.blur_sigma_px);
    let c = p.contrast_factor as f32;
    if c == 1.0 {
        return out;
    }
    for px in &mut out.data {
        for v in px.iter_mut() {
            *v = ((*v - 0.5) * c + 0.5).clamp(0.0, 1.0);
        }
    }
    out
}
