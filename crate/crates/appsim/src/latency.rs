use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pipeline stages that can be timed and padded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Stage {
    IoEventForward,
    Emulation,
    FrameEncode,
    Network,
    ImpairmentApply,
    SinkRender,
    RgbdRead,
    PhoneTracking,
    HandTracking,
    MeshBuild,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::IoEventForward,
        Stage::Emulation,
        Stage::FrameEncode,
        Stage::Network,
        Stage::ImpairmentApply,
        Stage::SinkRender,
        Stage::RgbdRead,
        Stage::PhoneTracking,
        Stage::HandTracking,
        Stage::MeshBuild,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::IoEventForward => "ioEventForward",
            Stage::Emulation => "emulation",
            Stage::FrameEncode => "frameEncode",
            Stage::Network => "network",
            Stage::ImpairmentApply => "impairmentApply",
            Stage::SinkRender => "sinkRender",
            Stage::RgbdRead => "rgbdRead",
            Stage::PhoneTracking => "phoneTracking",
            Stage::HandTracking => "handTracking",
            Stage::MeshBuild => "meshBuild",
        }
    }
}

/// Minimum duration per stage in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct StageDelays {
    pub io_event_forward: f64,
    pub emulation: f64,
    pub frame_encode: f64,
    pub network: f64,
    pub impairment_apply: f64,
    pub sink_render: f64,
    pub rgbd_read: f64,
    pub phone_tracking: f64,
    pub hand_tracking: f64,
    pub mesh_build: f64,
}

impl StageDelays {
    pub fn get(&self, stage: Stage) -> f64 {
        match stage {
            Stage::IoEventForward => self.io_event_forward,
            Stage::Emulation => self.emulation,
            Stage::FrameEncode => self.frame_encode,
            Stage::Network => self.network,
            Stage::ImpairmentApply => self.impairment_apply,
            Stage::SinkRender => self.sink_render,
            Stage::RgbdRead => self.rgbd_read,
            Stage::PhoneTracking => self.phone_tracking,
            Stage::HandTracking => self.hand_tracking,
            Stage::MeshBuild => self.mesh_build,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in Stage::ALL {
            let v = self.get(s);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "stageDelaysMs.{} must be a finite non-negative number",
                    s.name()
                )));
            }
        }
        Ok(())
    }
}

/// Stage padding: a stage that finishes early waits until its configured
/// duration has elapsed since it started.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LatencyPolicy {
    pub delays: StageDelays,
}

pub fn synthesize_latency(delays: StageDelays) -> Result<LatencyPolicy> {
    delays.validate()?;
    Ok(LatencyPolicy { delays })
}

impl LatencyPolicy {
    pub fn target(&self, stage: Stage) -> Duration {
        Duration::from_secs_f64(self.delays.get(stage) / 1000.0)
    }

    /// Blocks until `stage` has lasted at least its configured time and
    /// returns the stage's total duration.
    pub fn pad(&self, stage: Stage, started: Instant) -> Duration {
        wait_until(started + self.target(stage));
        started.elapsed()
    }
}

/// Sleeps to within a millisecond of `deadline`, then spins.
pub fn wait_until(deadline: Instant) {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        let left = deadline - now;
        if left > Duration::from_micros(1500) {
            std::thread::sleep(left - Duration::from_millis(1));
        } else {
            std::hint::spin_loop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delays_pass_through() {
        let p = synthesize_latency(StageDelays::default()).unwrap();
        let t = Instant::now();
        let d = p.pad(Stage::Emulation, t);
        assert!(d < Duration::from_millis(1));
    }

    #[test]
    fn emulation_pad_hits_target() {
        let p = synthesize_latency(StageDelays {
            emulation: 141.37,
            ..Default::default()
        })
        .unwrap();
        let t = Instant::now();
        std::thread::sleep(Duration::from_millis(20));
        let ms = p.pad(Stage::Emulation, t).as_secs_f64() * 1e3;
        assert!((ms - 141.37).abs() <= 2.0, "{ms}");
    }

    #[test]
    fn negative_delay_rejected() {
        let d = StageDelays {
            network: -1.0,
            ..Default::default()
        };
        let e = synthesize_latency(d).unwrap_err().to_string();
        assert!(e.contains("network"), "{e}");
    }

    #[test]
    fn camel_case_keys_with_defaults() {
        let d: StageDelays = serde_json::from_str(r#"{"emulation": 141.37, "sinkRender": 10.46}"#).unwrap();
        assert_eq!(d.emulation, 141.37);
        assert_eq!(d.sink_render, 10.46);
        assert_eq!(d.network, 0.0);
    }
}
