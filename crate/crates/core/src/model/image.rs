use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CameraIntrinsics;
use crate::{Error, Result};

/// Linear RGB triple, each channel in `[0, 1]`.
pub type Rgb = [f32; 3];

/// Row-major RGB raster with float channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<Rgb>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        ColorImage {
            width,
            height,
            data: vec![fill; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<Rgb>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "{} pixels supplied for a {}x{} image",
                data.len(),
                width,
                height
            )));
        }
        Ok(ColorImage {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let i = self.index(x, y);
        self.data[i] = c;
    }

    pub fn same_dims(&self, other: &ColorImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copies a rectangular window; the window must lie inside the image.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> ColorImage {
        let mut out = Vec::with_capacity(w as usize * h as usize);
        for y in y0..y0 + h {
            let row = self.index(x0, y);
            out.extend_from_slice(&self.data[row..row + w as usize]);
        }
        ColorImage {
            width: w,
            height: h,
            data: out,
        }
    }

    /// Rec. 601 luma, used wherever a single channel is needed.
    pub fn luma(&self) -> Vec<f64> {
        self.data
            .iter()
            .map(|c| 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64)
            .collect()
    }

    /// Rounds every channel onto the 8-bit grid used on disk.
    pub fn quantize(&mut self) {
        for px in &mut self.data {
            for ch in px.iter_mut() {
                *ch = quantize_channel(*ch);
            }
        }
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let mut raw = Vec::with_capacity(self.data.len() * 3);
        for px in &self.data {
            for &ch in px {
                raw.push(to_u8(ch));
            }
        }
        image::RgbImage::from_raw(self.width, self.height, raw).expect("buffer sized by dims")
    }

    pub fn from_rgb8(img: &image::RgbImage) -> Self {
        let data = img
            .pixels()
            .map(|p| [from_u8(p[0]), from_u8(p[1]), from_u8(p[2])])
            .collect();
        ColorImage {
            width: img.width(),
            height: img.height(),
            data,
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        encode_rgb8_png(&self.to_rgb8())
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn encode_rgb8_png(img: &image::RgbImage) -> Result<Vec<u8>> {
    use image::codecs::png::{CompressionType, FilterType, PngEncoder};
    use image::ImageEncoder;
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Sub).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        image::ColorType::Rgb8,
    )?;
    Ok(out)
}

#[inline]
pub(crate) fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[inline]
pub(crate) fn from_u8(v: u8) -> f32 {
    v as f32 / 255.0
}

#[inline]
pub(crate) fn quantize_channel(v: f32) -> f32 {
    from_u8(to_u8(v))
}

/// Row-major depth raster in metres; `0.0` marks an invalid sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32) -> Self {
        DepthImage {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Millimetre quantisation used by the on-disk format.
    pub fn to_millimetres(&self) -> Vec<u16> {
        self.data
            .iter()
            .map(|&d| (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
            .collect()
    }

    pub fn from_millimetres(width: u32, height: u32, mm: &[u16]) -> Self {
        DepthImage {
            width,
            height,
            data: mm.iter().map(|&v| v as f64 / 1000.0).collect(),
        }
    }

    pub fn quantize(&mut self) {
        for d in &mut self.data {
            *d = (*d * 1000.0).round().clamp(0.0, u16::MAX as f64) / 1000.0;
        }
    }
}

/// Registered colour + depth capture with its intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    pub intrinsics: CameraIntrinsics,
    pub color: ColorImage,
    pub depth: DepthImage,
    /// Capture time in microseconds.
    pub timestamp: u64,
}

impl RgbdFrame {
    pub fn new(
        intrinsics: CameraIntrinsics,
        color: ColorImage,
        depth: DepthImage,
        timestamp: u64,
    ) -> Result<Self> {
        let frame = RgbdFrame {
            intrinsics,
            color,
            depth,
            timestamp,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.intrinsics.width, self.intrinsics.height);
        if self.color.width != w || self.color.height != h {
            return Err(Error::Dimension(format!(
                "colour {}x{} does not match intrinsics {}x{}",
                self.color.width, self.color.height, w, h
            )));
        }
        if self.depth.width != w || self.depth.height != h {
            return Err(Error::Dimension(format!(
                "depth {}x{} does not match intrinsics {}x{}",
                self.depth.width, self.depth.height, w, h
            )));
        }
        if let Some(bad) = self.depth.data.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::Config(format!("invalid depth value {bad}")));
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }
}

/// Boolean foreground grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl SegmentMask {
    pub fn new(width: u32, height: u32) -> Self {
        SegmentMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_i(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u32) < self.width
            && (y as u32) < self.height
            && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let i = y as usize * self.width as usize + x as usize;
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn iou(&self, other: &SegmentMask) -> f64 {
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            inter += (*a && *b) as usize;
            union += (*a || *b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Tight bounding box `(x0, y0, w, h)` of the foreground.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != u32::MAX).then(|| (x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    /// Row-major run-length encoding; the first run counts `false` pixels
    /// (possibly zero) and runs alternate from there.
    pub fn to_rle(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &b in &self.bits {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn from_rle(width: u32, height: u32, runs: &[u32]) -> Result<Self> {
        let total = width as usize * height as usize;
        let mut bits = Vec::with_capacity(total);
        let mut value = false;
        for &r in runs {
            bits.extend(std::iter::repeat(value).take(r as usize));
            value = !value;
        }
        if bits.len() != total {
            return Err(Error::Dimension(format!(
                "rle covers {} pixels, expected {}",
                bits.len(),
                total
            )));
        }
        Ok(SegmentMask {
            width,
            height,
            bits,
        })
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let raw = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let img = image::GrayImage::from_raw(self.width, self.height, raw)
            .expect("buffer sized by dims");
        let rgb = image::DynamicImage::ImageLuma8(img).to_rgb8();
        encode_rgb8_png(&rgb)
    }
}
