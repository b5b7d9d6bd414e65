use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{render, GroundTruth, HandSpec, RenderOptions, SceneSpec};
use crate::geom::Point2;
use crate::model::io::{write_intrinsics, write_frame, write_json, DEFAULT_FRAME_PERIOD_US, INTRINSICS_FILE, TIMESTAMPS_FILE};
use crate::model::{CameraIntrinsics, Pose, SegmentMask};
use crate::{Error, Result};

pub const TRUTH_FILE: &str = "truth.jsonl";

/// One line of `truth.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TruthRecord {
    pub frame: usize,
    #[serde(rename = "T")]
    pub t: [f64; 3],
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub mask_rle: Vec<u32>,
    /// Marker id (as a string key) to four `[u, v]` corners.
    pub markers: BTreeMap<String, [Point2; 4]>,
}

impl TruthRecord {
    pub fn from_truth(frame: usize, truth: &GroundTruth) -> Self {
        TruthRecord {
            frame,
            t: truth.pose.translation.into(),
            r: truth.pose.rotation_row_major(),
            mask_rle: truth.hand_mask.to_rle(),
            markers: truth
                .marker_corners_px
                .iter()
                .map(|(id, c)| (id.to_string(), *c))
                .collect(),
        }
    }

    pub fn pose(&self) -> Result<Pose> {
        Pose::from_row_major(self.t, self.r)
    }

    pub fn mask(&self, width: u32, height: u32) -> Result<SegmentMask> {
        SegmentMask::from_rle(width, height, &self.mask_rle)
    }

    pub fn marker_corners(&self) -> BTreeMap<u32, [Point2; 4]> {
        self.markers
            .iter()
            .filter_map(|(k, v)| k.parse().ok().map(|id| (id, *v)))
            .collect()
    }
}

/// Renders every spec into `out` as a frame sequence plus `truth.jsonl`.
/// Frames are timestamped at 30 fps.
pub fn render_sequence(specs: &[SceneSpec], out: &Path) -> Result<Vec<GroundTruth>> {
    let first = specs
        .first()
        .ok_or_else(|| Error::Config("render_sequence needs at least one scene".into()))?;
    if specs.iter().any(|s| s.intrinsics != first.intrinsics) {
        return Err(Error::Config("all scenes in a sequence must share intrinsics".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_intrinsics(&out.join(INTRINSICS_FILE), &first.intrinsics)?;

    let truth_path = out.join(TRUTH_FILE);
    let file = std::fs::File::create(&truth_path).map_err(|e| Error::io(&truth_path, e))?;
    let mut writer = BufWriter::new(file);
    let mut truths = Vec::with_capacity(specs.len());
    let mut stamps = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let (mut frame, truth) = render(spec)?;
        frame.timestamp = i as u64 * DEFAULT_FRAME_PERIOD_US;
        write_frame(out, i, &frame)?;
        let line = serde_json::to_string(&TruthRecord::from_truth(i, &truth))?;
        writeln!(writer, "{line}").map_err(|e| Error::io(&truth_path, e))?;
        stamps.push(frame.timestamp);
        truths.push(truth);
    }
    writer.flush().map_err(|e| Error::io(&truth_path, e))?;
    write_json(&out.join(TIMESTAMPS_FILE), &stamps)?;
    Ok(truths)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Camera orbit around a phone: yaw sweeps linearly across the sequence
/// while distance ramps between its bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OrbitConfig {
    pub frames: usize,
    pub yaw_deg: [f64; 2],
    pub distance_m: [f64; 2],
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub hand: Option<HandSpec>,
    #[serde(default)]
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub options: RenderOptions,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            frames: 50,
            yaw_deg: [-30.0, 30.0],
            distance_m: [0.25, 0.40],
            pitch_deg: 10.0,
            hand: None,
            intrinsics: CameraIntrinsics::default(),
            options: RenderOptions::default(),
        }
    }
}

pub fn orbit_specs(cfg: &OrbitConfig) -> Vec<SceneSpec> {
    let n = cfg.frames;
    (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
            let yaw = (cfg.yaw_deg[0] + t * (cfg.yaw_deg[1] - cfg.yaw_deg[0])).to_radians();
            let dist = cfg.distance_m[0] + t * (cfg.distance_m[1] - cfg.distance_m[0]);
            // A small wobble keeps successive poses from being coplanar in pitch.
            let pitch = cfg.pitch_deg.to_radians() * (1.0 + 0.3 * (7.0 * t).sin());
            let roll = 0.05 * (5.0 * t).cos();
            let lateral = Vector3::new(0.01 * (3.0 * t).sin(), -0.008 * (4.0 * t).cos(), dist);
            let pose = Pose::looking_at_phone(lateral, yaw, pitch, roll);
            let mut spec = SceneSpec::new(pose);
            spec.intrinsics = cfg.intrinsics;
            spec.hand_spec = cfg.hand.clone();
            spec.options = cfg.options.clone();
            spec
        })
        .collect()
}

/// Input accepted by the `scenegen` command: explicit scenes, an orbit, or both
/// (explicit scenes first).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneConfig {
    #[serde(default)]
    pub scenes: Vec<SceneSpec>,
    #[serde(default)]
    pub orbit: Option<OrbitConfig>,
}

impl SceneConfig {
    pub fn specs(&self) -> Vec<SceneSpec> {
        let mut out = self.scenes.clone();
        if let Some(o) = &self.orbit {
            out.extend(orbit_specs(o));
        }
        out
    }
}
