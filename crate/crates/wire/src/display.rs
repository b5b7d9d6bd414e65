use empathd_core::{ColorImage, VirtualDisplayConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Scaled {
    pub image: ColorImage,
    /// The target was larger than the source on some axis.
    pub upscaled: bool,
}

/// Bilinear resample to the stream resolution with pixel-centre alignment.
/// A source already at the target size is returned unchanged.
pub fn scale_display(img: &ColorImage, cfg: &VirtualDisplayConfig) -> Scaled {
    let (dw, dh) = (cfg.stream_width, cfg.stream_height);
    let upscaled = dw > img.width || dh > img.height;
    if dw == img.width && dh == img.height {
        return Scaled {
            image: img.clone(),
            upscaled,
        };
    }
    let sx = img.width as f64 / dw as f64;
    let sy = img.height as f64 / dh as f64;
    let taps = |dst: u32, scale: f64, len: u32| {
        let s = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = s.floor() as u32;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, (s - i0 as f64) as f32)
    };
    let cols: Vec<(u32, u32, f32)> = (0..dw).map(|x| taps(x, sx, img.width)).collect();
    let mut out = ColorImage::new(dw, dh, [0.0; 3]);
    for y in 0..dh {
        let (y0, y1, wy) = taps(y, sy, img.height);
        for (x, &(x0, x1, wx)) in cols.iter().enumerate() {
            let top = lerp(img.get(x0, y0), img.get(x1, y0), wx);
            let bottom = lerp(img.get(x0, y1), img.get(x1, y1), wx);
            out.set(x as u32, y, lerp(top, bottom, wy));
        }
    }
    Scaled {
        image: out,
        upscaled,
    }
}

#[inline]
fn lerp(a: [f32; 3], b: [f32; 3], w: f32) -> [f32; 3] {
    [
        a[0] + w * (b[0] - a[0]),
        a[1] + w * (b[1] - a[1]),
        a[2] + w * (b[2] - a[2]),
    ]
}
