use rayon::prelude::*;

use crate::model::ColorImage;

/// Normalised 1-D Gaussian taps for radius `ceil(3σ)`. `σ ≤ 0` gives `[1]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    if !(sigma > 0.0) {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter().map(|t| (t / sum) as f32).collect()
}

/// Separable Gaussian blur with edge pixels repeated past the border.
pub fn gaussian_blur(img: &ColorImage, sigma: f64) -> ColorImage {
    blur_spans(img, sigma, None)
}

/// Blurs only the pixels in `spans[y] = Some((x0, x1))` (inclusive); all
/// other pixels are copied from `img`. `None` blurs everything.
pub(crate) fn blur_spans(
    img: &ColorImage,
    sigma: f64,
    spans: Option<&[Option<(usize, usize)>]>,
) -> ColorImage {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return img.clone();
    }
    let r = k.len() / 2;
    let (w, h) = (img.width as usize, img.height as usize);
    let row_len = 3 * w;
    let src = img.data.as_flattened();
    let span = |y: usize| match spans {
        None => Some((0, w - 1)),
        Some(s) => s[y],
    };
    let first = (0..h).find(|&y| span(y).is_some());
    let last = (0..h).rev().find(|&y| span(y).is_some());
    let (Some(first), Some(last)) = (first, last) else {
        return img.clone();
    };
    let (h0, h1) = (first.saturating_sub(r), (last + r).min(h - 1));

    let mut tmp = vec![0.0f32; src.len()];
    tmp[h0 * row_len..(h1 + 1) * row_len]
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, out)| {
            let y = h0 + i;
            let row = &src[y * row_len..(y + 1) * row_len];
            let mut padded = Vec::with_capacity(row_len + 6 * r);
            for _ in 0..r {
                padded.extend_from_slice(&row[..3]);
            }
            padded.extend_from_slice(row);
            for _ in 0..r {
                padded.extend_from_slice(&row[row_len - 3..]);
            }
            let centre = &padded[3 * r..3 * r + row_len];
            for (o, s) in out.iter_mut().zip(centre) {
                *o = k[r] * s;
            }
            for j in 1..=r {
                let right = &padded[3 * (r + j)..3 * (r + j) + row_len];
                let left = &padded[3 * (r - j)..3 * (r - j) + row_len];
                let kv = k[r + j];
                for ((o, a), b) in out.iter_mut().zip(right).zip(left) {
                    *o += kv * (a + b);
                }
            }
        });

    let mut data = img.data.clone();
    data.as_flattened_mut()
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(y, out)| {
            let Some((x0, x1)) = span(y) else {
                return;
            };
            let (c0, c1) = (3 * x0, 3 * (x1 + 1));
            let out = &mut out[c0..c1];
            let row = |yy: usize| &tmp[yy * row_len + c0..yy * row_len + c1];
            for (o, s) in out.iter_mut().zip(row(y)) {
                *o = k[r] * s;
            }
            for j in 1..=r {
                let down = row((y + j).min(h - 1));
                let up = row(y.saturating_sub(j));
                let kv = k[r + j];
                for ((o, a), b) in out.iter_mut().zip(down).zip(up) {
                    *o += kv * (a + b);
                }
            }
        });
    ColorImage {
        width: img.width,
        height: img.height,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(img: &ColorImage, sigma: f64, x: i64, y: i64) -> [f64; 3] {
        let r = (3.0 * sigma).ceil() as i64;
        let mut acc = [0.0; 3];
        let mut norm = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let wgt = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                let sx = (x + dx).clamp(0, img.width as i64 - 1) as u32;
                let sy = (y + dy).clamp(0, img.height as i64 - 1) as u32;
                let p = img.get(sx, sy);
                for c in 0..3 {
                    acc[c] += wgt * p[c] as f64;
                }
                norm += wgt;
            }
        }
        acc.map(|v| v / norm)
    }

    #[test]
    fn impulse_matches_direct_convolution() {
        let mut img = ColorImage::new(41, 37, [0.0; 3]);
        img.set(20, 18, [1.0, 0.5, 0.25]);
        img.set(1, 2, [0.3, 1.0, 0.0]);
        let out = gaussian_blur(&img, 3.0);
        for y in 0..37 {
            for x in 0..41 {
                let d = direct(&img, 3.0, x, y);
                let g = out.get(x as u32, y as u32);
                for c in 0..3 {
                    assert!((g[c] as f64 - d[c]).abs() < 1e-4, "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn spans_limit_the_blurred_region() {
        let mut img = ColorImage::new(30, 20, [0.0; 3]);
        for y in 0..20 {
            for x in 0..30 {
                img.set(x, y, [((x + y) % 3) as f32 / 2.0, 0.5, 0.0]);
            }
        }
        let full = gaussian_blur(&img, 1.5);
        let mut spans = vec![None; 20];
        spans[7] = Some((4, 12));
        spans[8] = Some((0, 29));
        let part = blur_spans(&img, 1.5, Some(&spans));
        for y in 0..20u32 {
            for x in 0..30u32 {
                let inside = spans[y as usize].map_or(false, |(a, b)| (a..=b).contains(&(x as usize)));
                let want = if inside { full.get(x, y) } else { img.get(x, y) };
                assert_eq!(part.get(x, y), want, "({x},{y})");
            }
        }
    }

    #[test]
    fn zero_sigma_is_identity_and_constants_survive() {
        let img = ColorImage::new(9, 9, [0.2, 0.4, 0.6]);
        assert_eq!(gaussian_blur(&img, 0.0), img);
        let b = gaussian_blur(&img, 2.5);
        for p in &b.data {
            for c in 0..3 {
                assert!((p[c] - img.data[0][c]).abs() < 1e-5);
            }
        }
    }
}
