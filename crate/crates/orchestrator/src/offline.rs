use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use empathd_appsim::{synthesize_latency, AppScreen, LatencyPolicy, Scenario, Stage};
use empathd_core::impairments::{apply_mesh, apply_visual};
use empathd_core::meshgen::MeshParams;
use empathd_core::model::io::RgbdSequence;
use empathd_core::{CameraIntrinsics, ColorImage, ImpairmentProfile, Pose, RgbdFrame};
use empathd_wire::{read_trace, scale_display, TouchEvent};
use serde::Serialize;

use crate::compose::Compositor;
use crate::handpath::{HandTracker, PoseSource};
use crate::report::{LatencyReport, Metric, Recorder};
use crate::{Error, PipelineConfig, Result};

/// Per-frame timing line written to `timing.jsonl`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameTiming {
    pub frame: usize,
    pub timestamp_micros: u64,
    pub pose_reused: bool,
    pub rgbd_read_ms: f64,
    pub phone_tracking_ms: f64,
    pub hand_tracking_ms: f64,
    pub mesh_build_ms: f64,
    pub network_ms: f64,
    pub impairment_apply_ms: f64,
    pub sink_render_ms: f64,
    pub end_to_end_ms: f64,
}

#[derive(Debug, Clone)]
pub struct FrameResult {
    pub raw: ColorImage,
    pub filtered: ColorImage,
    /// Phone pose the frame was composited with.
    pub pose: Pose,
    pub source: PoseSource,
    pub timing: FrameTiming,
}

/// All three tiers collapsed into one deterministic loop.
pub struct OfflinePipeline {
    pub tracker: HandTracker,
    pub compositor: Compositor,
    policy: LatencyPolicy,
    app: AppScreen,
    events: Vec<TouchEvent>,
    next_event: usize,
    scaled: ColorImage,
    scenario: Scenario,
}

impl OfflinePipeline {
    pub fn new(scenario: &Scenario, intrinsics: CameraIntrinsics, mesh: MeshParams) -> Result<Self> {
        let policy = synthesize_latency(scenario.stage_delays_ms)?;
        let events = match &scenario.trace {
            Some(p) => read_trace(p)?,
            None => Vec::new(),
        };
        let app = scenario.build_app();
        let scaled = scale_display(&app.render(), &scenario.display_config).image;
        let tracker = HandTracker::new(mesh);
        let compositor = Compositor {
            intrinsics,
            geometry: tracker.geometry.clone(),
            display: scenario.display_config,
            eye_offset: mesh.eye_offset,
        };
        Ok(OfflinePipeline {
            tracker,
            compositor,
            policy,
            app,
            events,
            next_event: 0,
            scaled,
            scenario: scenario.clone(),
        })
    }

    /// The scaled app frame currently shown on the virtual phone.
    pub fn screen(&self) -> &ColorImage {
        &self.scaled
    }

    /// Feeds trace events up to `t_micros` into the app.
    fn advance_app(&mut self, t_micros: u64) {
        let mut changed = false;
        while let Some(ev) = self.events.get(self.next_event) {
            if ev.t_micros > t_micros {
                break;
            }
            changed |= self.app.handle_touch(ev).changed;
            self.next_event += 1;
        }
        if changed {
            self.scaled = scale_display(&self.app.render(), &self.scenario.display_config).image;
        }
    }

    /// Processes one frame. `load` performs the read so that it is timed as
    /// part of the frame. `Ok(None)` means no pose was available yet.
    pub fn step(
        &mut self,
        index: usize,
        load: impl FnOnce() -> Result<RgbdFrame>,
        profile: &ImpairmentProfile,
        rec: &Recorder,
    ) -> Result<Option<FrameResult>> {
        let t0 = Instant::now();
        let frame = load()?;
        let rgbd_read = self.policy.pad(Stage::RgbdRead, t0);
        rec.stage(Stage::RgbdRead, rgbd_read);
        self.advance_app(frame.timestamp);

        let Some(hand) = self.tracker.process(&frame, &self.policy)? else {
            log::warn!("frame {index}: no phone pose yet, skipped");
            rec.bump(|c| c.frames_skipped += 1);
            return Ok(None);
        };
        if hand.source == PoseSource::Reused {
            rec.bump(|c| c.pose_dropouts += 1);
        }
        rec.stage(Stage::PhoneTracking, hand.phone_tracking);
        rec.stage(Stage::HandTracking, hand.hand_tracking);
        rec.stage(Stage::MeshBuild, hand.mesh_build);

        let tn = Instant::now();
        let network = self.policy.pad(Stage::Network, tn);
        rec.stage(Stage::Network, network);

        let ts = Instant::now();
        let mesh = apply_mesh(&hand.mesh, profile, frame.timestamp as f64 / 1e6);
        let raw = self
            .compositor
            .compose(&hand.pose, &self.scaled, Some((&mesh, &frame.color)))
            .image;
        let ti = Instant::now();
        let filtered = apply_visual(&raw, profile);
        let impairment = ti.elapsed();
        rec.stage(Stage::ImpairmentApply, impairment);
        let sink = self.policy.pad(Stage::SinkRender, ts);
        rec.stage(Stage::SinkRender, sink);
        let e2e = t0.elapsed();
        rec.record_duration(Metric::EndToEndHand, e2e);

        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        Ok(Some(FrameResult {
            raw,
            filtered,
            pose: hand.pose,
            source: hand.source,
            timing: FrameTiming {
                frame: index,
                timestamp_micros: frame.timestamp,
                pose_reused: hand.source == PoseSource::Reused,
                rgbd_read_ms: ms(rgbd_read),
                phone_tracking_ms: ms(hand.phone_tracking),
                hand_tracking_ms: ms(hand.hand_tracking),
                mesh_build_ms: ms(hand.mesh_build),
                network_ms: ms(network),
                impairment_apply_ms: ms(impairment),
                sink_render_ms: ms(sink),
                end_to_end_ms: ms(e2e),
            },
        }))
    }
}

#[derive(Debug, Clone)]
pub struct OfflineRun {
    /// `(input frame index, written PNG)` for every composited frame.
    pub outputs: Vec<(usize, PathBuf)>,
    pub frames_in: usize,
    pub report: LatencyReport,
}

pub fn output_file_name(index: usize) -> String {
    format!("{index:06}.png")
}

/// Composites every frame of the sequence and writes `out/NNNNNN.png`
/// (filtered), `out/raw/NNNNNN.png`, `out/timing.jsonl` and the report.
pub fn run_offline(cfg: &PipelineConfig) -> Result<OfflineRun> {
    cfg.validate()?;
    let scenario = cfg.load_scenario()?;
    let profile = cfg.load_profile()?;
    let frames = cfg.frames_dir(&scenario).ok_or_else(|| {
        Error::Config("offline mode needs an RGB-D sequence (scenario `frames` or --frames)".into())
    })?;
    let run = run_offline_sequence(&scenario, &profile, &frames, &cfg.out, cfg)?;
    run.report.write_json(&cfg.report_path())?;
    Ok(run)
}

fn run_offline_sequence(
    scenario: &Scenario,
    profile: &ImpairmentProfile,
    frames: &Path,
    out: &Path,
    cfg: &PipelineConfig,
) -> Result<OfflineRun> {
    let seq = RgbdSequence::open(frames)?;
    if seq.is_empty() {
        return Err(Error::Config(format!("no frames in {}", frames.display())));
    }
    let raw_dir = out.join("raw");
    std::fs::create_dir_all(&raw_dir)?;
    let mut pipeline = OfflinePipeline::new(scenario, seq.intrinsics, cfg.mesh)?;
    pipeline.tracker.smoothing = cfg.pose_smoothing;
    let rec = Recorder::new();
    let mut timing = std::io::BufWriter::new(std::fs::File::create(out.join("timing.jsonl"))?);
    let mut outputs = Vec::new();
    for n in 0..seq.len() {
        let Some(res) = pipeline.step(n, || Ok(seq.load(n)?), profile, &rec)? else {
            continue;
        };
        let path = out.join(output_file_name(n));
        res.filtered.save_png(&path)?;
        res.raw.save_png(&raw_dir.join(output_file_name(n)))?;
        let line = serde_json::to_string(&res.timing).map_err(|e| Error::Runtime(e.to_string()))?;
        writeln!(timing, "{line}")?;
        outputs.push((n, path));
    }
    timing.flush()?;
    Ok(OfflineRun {
        outputs,
        frames_in: seq.len(),
        report: rec.report(),
    })
}
