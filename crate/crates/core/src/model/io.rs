//! On-disk frame sequences and profile files.
//!
//! A sequence directory holds `NNNNNN.color.png` (8-bit RGB),
//! `NNNNNN.depth.png` (16-bit grey, millimetres, 0 = invalid) and
//! `intrinsics.json`. An optional `timestamps.json` (array of microsecond
//! values, one per frame) carries capture times; without it frames are
//! spaced at 30 fps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};

use super::{CameraIntrinsics, ColorImage, DepthImage, ImpairmentProfile, RgbdFrame};
use crate::{Error, Result};

pub const INTRINSICS_FILE: &str = "intrinsics.json";
pub const TIMESTAMPS_FILE: &str = "timestamps.json";
pub const DEFAULT_FRAME_PERIOD_US: u64 = 33_333;

pub fn color_file_name(index: usize) -> String {
    format!("{index:06}.color.png")
}

pub fn depth_file_name(index: usize) -> String {
    format!("{index:06}.depth.png")
}

#[derive(Default)]
struct Pair {
    color: Option<PathBuf>,
    depth: Option<PathBuf>,
}

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let k: CameraIntrinsics =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    k.validate()?;
    Ok(k)
}

pub fn write_intrinsics(path: &Path, k: &CameraIntrinsics) -> Result<()> {
    write_json(path, k)
}

pub fn load_rgbd_sequence(dir: &Path) -> Result<Vec<RgbdFrame>> {
    let seq = RgbdSequence::open(dir)?;
    (0..seq.len()).map(|n| seq.load(n)).collect()
}

/// Indexed frame directory; frames are decoded on demand.
#[derive(Debug, Clone)]
pub struct RgbdSequence {
    pub intrinsics: CameraIntrinsics,
    pairs: Vec<(PathBuf, PathBuf)>,
    timestamps: Vec<u64>,
}

impl RgbdSequence {
    pub fn open(dir: &Path) -> Result<Self> {
        let mut pairs: BTreeMap<usize, Pair> = BTreeMap::new();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let (stem, is_color) = if let Some(s) = name.strip_suffix(".color.png") {
                (s, true)
            } else if let Some(s) = name.strip_suffix(".depth.png") {
                (s, false)
            } else {
                continue;
            };
            let index: usize = stem
                .parse()
                .map_err(|_| Error::format(entry.path(), "frame index is not a number"))?;
            let pair = pairs.entry(index).or_default();
            if is_color {
                pair.color = Some(entry.path());
            } else {
                pair.depth = Some(entry.path());
            }
        }
        if pairs.is_empty() {
            return Ok(RgbdSequence {
                intrinsics: CameraIntrinsics::default(),
                pairs: Vec::new(),
                timestamps: Vec::new(),
            });
        }

        let kpath = dir.join(INTRINSICS_FILE);
        if !kpath.exists() {
            return Err(Error::Config(format!(
                "{} missing from frame directory {}",
                INTRINSICS_FILE,
                dir.display()
            )));
        }
        let intrinsics = read_intrinsics(&kpath)?;
        let stamps = read_timestamps(dir)?;
        let mut out = Vec::with_capacity(pairs.len());
        let mut timestamps = Vec::with_capacity(pairs.len());
        for (n, (index, pair)) in pairs.into_iter().enumerate() {
            let color = pair.color.ok_or_else(|| {
                Error::format(dir.join(color_file_name(index)), "colour image missing")
            })?;
            let depth = pair.depth.ok_or_else(|| {
                Error::format(dir.join(depth_file_name(index)), "depth image missing")
            })?;
            timestamps.push(match &stamps {
                Some(ts) => *ts.get(n).ok_or_else(|| {
                    Error::format(dir.join(TIMESTAMPS_FILE), "fewer timestamps than frames")
                })?,
                None => index as u64 * DEFAULT_FRAME_PERIOD_US,
            });
            out.push((color, depth));
        }
        Ok(RgbdSequence {
            intrinsics,
            pairs: out,
            timestamps,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn timestamp(&self, n: usize) -> Option<u64> {
        self.timestamps.get(n).copied()
    }

    /// Decodes the `n`-th frame in index order.
    pub fn load(&self, n: usize) -> Result<RgbdFrame> {
        let (color_path, depth_path) = self
            .pairs
            .get(n)
            .ok_or_else(|| Error::Config(format!("frame {n} out of range ({})", self.len())))?;
        let color = read_color(color_path)?;
        let depth = read_depth(depth_path)?;
        let k = self.intrinsics;
        for (path, w, h) in [
            (color_path, color.width, color.height),
            (depth_path, depth.width, depth.height),
        ] {
            if w != k.width || h != k.height {
                return Err(Error::format(
                    path,
                    format!("image is {}x{}, intrinsics say {}x{}", w, h, k.width, k.height),
                ));
            }
        }
        Ok(RgbdFrame {
            intrinsics: k,
            color,
            depth,
            timestamp: self.timestamps[n],
        })
    }
}

fn read_timestamps(dir: &Path) -> Result<Option<Vec<u64>>> {
    let path = dir.join(TIMESTAMPS_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let ts = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    Ok(Some(ts))
}

fn read_color(path: &Path) -> Result<ColorImage> {
    let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(ColorImage::from_rgb8(&img.to_rgb8()))
}

fn read_depth(path: &Path) -> Result<DepthImage> {
    let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    let img = match img {
        image::DynamicImage::ImageLuma16(g) => g,
        other => {
            return Err(Error::format(
                path,
                format!("depth must be 16-bit greyscale, found {:?}", other.color()),
            ))
        }
    };
    Ok(DepthImage::from_millimetres(
        img.width(),
        img.height(),
        img.as_raw(),
    ))
}

/// Writes the colour/depth pair for one frame.
pub fn write_frame(dir: &Path, index: usize, frame: &RgbdFrame) -> Result<()> {
    frame.color.save_png(&dir.join(color_file_name(index)))?;
    let mm = frame.depth.to_millimetres();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(frame.depth.width, frame.depth.height, mm)
            .expect("buffer sized by dims");
    let path = dir.join(depth_file_name(index));
    img.save(&path).map_err(|e| Error::format(&path, e.to_string()))?;
    Ok(())
}

/// Writes a whole sequence, including intrinsics and timestamps.
pub fn write_rgbd_sequence(dir: &Path, frames: &[RgbdFrame]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if let Some(first) = frames.first() {
        write_intrinsics(&dir.join(INTRINSICS_FILE), &first.intrinsics)?;
    }
    for (i, f) in frames.iter().enumerate() {
        write_frame(dir, i, f)?;
    }
    let ts: Vec<u64> = frames.iter().map(|f| f.timestamp).collect();
    write_json(&dir.join(TIMESTAMPS_FILE), &ts)
}

pub fn load_profile(path: &Path) -> Result<ImpairmentProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_profile(path: &Path, profile: &ImpairmentProfile) -> Result<()> {
    write_json(path, profile)
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
