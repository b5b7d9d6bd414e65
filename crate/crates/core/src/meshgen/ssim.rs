use crate::model::ColorImage;
use crate::{Error, Result};

pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
pub const DYNAMIC_RANGE: f64 = 1.0;
pub const DEFAULT_WINDOW: u32 = 7;

/// Mean SSIM of the luma planes over every `window`×`window` placement.
pub fn ssim(a: &ColorImage, b: &ColorImage, window: u32) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::Dimension(format!(
            "ssim inputs differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    ssim_plane(&a.luma(), &b.luma(), a.width, a.height, window)
}

/// Mean SSIM of two single-channel planes with a uniform window.
pub fn ssim_plane(a: &[f64], b: &[f64], width: u32, height: u32, window: u32) -> Result<f64> {
    let (w, h) = (width as usize, height as usize);
    if a.len() != w * h || b.len() != w * h {
        return Err(Error::Dimension("plane length does not match dimensions".into()));
    }
    let n = window as usize;
    if n == 0 || n > w || n > h {
        return Err(Error::Dimension(format!(
            "window {n} does not fit a {w}x{h} image"
        )));
    }
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);

    // Summed-area tables of a, b, a², b², ab.
    let stride = w + 1;
    let mut sat = vec![[0.0f64; 5]; stride * (h + 1)];
    for y in 0..h {
        let mut row = [0.0f64; 5];
        for x in 0..w {
            let (p, q) = (a[y * w + x], b[y * w + x]);
            let v = [p, q, p * p, q * q, p * q];
            for k in 0..5 {
                row[k] += v[k];
                sat[(y + 1) * stride + x + 1][k] = sat[y * stride + x + 1][k] + row[k];
            }
        }
    }
    let area = (n * n) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - n {
        for x in 0..=w - n {
            let mut s = [0.0f64; 5];
            for k in 0..5 {
                s[k] = sat[(y + n) * stride + x + n][k] - sat[y * stride + x + n][k]
                    - sat[(y + n) * stride + x][k]
                    + sat[y * stride + x][k];
                s[k] /= area;
            }
            let (ma, mb) = (s[0], s[1]);
            let va = s[2] - ma * ma;
            let vb = s[3] - mb * mb;
            let cov = s[4] - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct per-window evaluation.
    fn reference(a: &[f64], b: &[f64], w: usize, h: usize, n: usize) -> f64 {
        let c1 = 0.01f64.powi(2);
        let c2 = 0.03f64.powi(2);
        let mut total = 0.0;
        let mut count = 0;
        for y0 in 0..=h - n {
            for x0 in 0..=w - n {
                let px: Vec<(f64, f64)> = (y0..y0 + n)
                    .flat_map(|y| (x0..x0 + n).map(move |x| (y, x)))
                    .map(|(y, x)| (a[y * w + x], b[y * w + x]))
                    .collect();
                let m = px.len() as f64;
                let ma = px.iter().map(|p| p.0).sum::<f64>() / m;
                let mb = px.iter().map(|p| p.1).sum::<f64>() / m;
                let va = px.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>() / m;
                let vb = px.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>() / m;
                let cov = px.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / m;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn identical_images_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..40 * 30).map(|_| rng.gen()).collect();
        let s = ssim_plane(&a, &a, 40, 30, 7).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_black_vs_white_closed_form() {
        let a = vec![0.0; 20 * 20];
        let b = vec![1.0; 20 * 20];
        let c1 = 0.01f64.powi(2);
        let c2 = 0.03f64.powi(2);
        let expected = (c1 * c2) / ((1.0 + c1) * c2);
        let s = ssim_plane(&a, &b, 20, 20, 7).unwrap();
        assert!((s - expected).abs() < 1e-12, "{s} vs {expected}");
    }

    #[test]
    fn matches_direct_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [3usize, 7, 8] {
            let (w, h) = (37usize, 29usize);
            let a: Vec<f64> = (0..w * h).map(|_| rng.gen()).collect();
            let b: Vec<f64> = a.iter().map(|v| v * 0.8 + rng.gen::<f64>() * 0.2).collect();
            let fast = ssim_plane(&a, &b, w as u32, h as u32, n as u32).unwrap();
            let slow = reference(&a, &b, w, h, n);
            assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
        }
    }

    #[test]
    fn dimension_errors() {
        let a = ColorImage::new(10, 10, [0.0; 3]);
        let b = ColorImage::new(11, 10, [0.0; 3]);
        assert!(matches!(ssim(&a, &b, 7), Err(Error::Dimension(_))));
        assert!(ssim(&a, &a, 11).is_err());
    }
}
