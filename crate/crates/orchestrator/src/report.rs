use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use empathd_appsim::Stage;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Stages on the touch → displayed-frame path.
pub const TOUCH_STAGES: [Stage; 6] = [
    Stage::IoEventForward,
    Stage::Emulation,
    Stage::FrameEncode,
    Stage::Network,
    Stage::ImpairmentApply,
    Stage::SinkRender,
];

/// Computation stages on the hand-move → rendered-mesh path.
pub const HAND_STAGES: [Stage; 4] = [
    Stage::RgbdRead,
    Stage::PhoneTracking,
    Stage::HandTracking,
    Stage::MeshBuild,
];

/// Clock-skew allowance when checking that end-to-end latency covers the
/// sum of its stages.
pub const SKEW_SLACK_MS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Stage(Stage),
    EndToEndTouch,
    EndToEndHand,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageStats {
    pub mean_ms: f64,
    /// Sample standard deviation.
    pub sd_ms: f64,
    pub count: u64,
}

impl StageStats {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return StageStats::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        StageStats {
            mean_ms: mean,
            sd_ms: sd,
            count: n as u64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Counters {
    pub pose_dropouts: u64,
    pub frames_skipped: u64,
    pub frames_emitted: u64,
    pub frames_suppressed: u64,
    /// Updates the sink discarded from its queue.
    pub frames_dropped: u64,
    pub seq_gaps: u64,
    pub touches_received: u64,
    pub up_events: u64,
    pub reconnects: u64,
    pub protocol_resets: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkState {
    Up,
    Down,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LatencyReport {
    pub stages: BTreeMap<String, StageStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_to_end_touch: Option<StageStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_to_end_hand: Option<StageStats>,
    #[serde(default)]
    pub hand_breakdown: BTreeMap<String, StageStats>,
    #[serde(default)]
    pub counters: Counters,
    #[serde(default)]
    pub links: BTreeMap<String, LinkState>,
}

impl LatencyReport {
    pub fn stage(&self, s: Stage) -> Option<&StageStats> {
        self.stages.get(s.name()).or_else(|| self.hand_breakdown.get(s.name()))
    }

    fn mean(&self, s: Stage) -> f64 {
        self.stage(s).map_or(0.0, |st| st.mean_ms)
    }

    /// Broken report invariants, empty when the report is consistent.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let paths = [
            (
                "endToEndTouch",
                self.end_to_end_touch,
                &[Stage::IoEventForward, Stage::Emulation, Stage::Network, Stage::SinkRender][..],
            ),
            (
                "endToEndHand",
                self.end_to_end_hand,
                &[
                    Stage::RgbdRead,
                    Stage::PhoneTracking,
                    Stage::HandTracking,
                    Stage::Network,
                    Stage::SinkRender,
                ][..],
            ),
        ];
        for (name, e2e, parts) in paths {
            let Some(e2e) = e2e else { continue };
            let sum: f64 = parts.iter().map(|s| self.mean(*s)).sum();
            if e2e.mean_ms < sum - SKEW_SLACK_MS {
                out.push(format!(
                    "{name} mean {:.2} ms is below its stage sum {:.2} ms",
                    e2e.mean_ms, sum
                ));
            }
        }
        let all = self
            .stages
            .iter()
            .chain(&self.hand_breakdown)
            .map(|(k, v)| (k.as_str(), v))
            .chain(self.end_to_end_touch.iter().map(|v| ("endToEndTouch", v)))
            .chain(self.end_to_end_hand.iter().map(|v| ("endToEndHand", v)));
        for (k, v) in all {
            if v.count == 0 {
                out.push(format!("{k} reported with no samples"));
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:>10} {:>9} {:>6}", "stage", "mean ms", "sd ms", "n");
        let mut row = |name: &str, st: &StageStats| {
            let _ = writeln!(
                s,
                "{:<18} {:>10.2} {:>9.2} {:>6}",
                name, st.mean_ms, st.sd_ms, st.count
            );
        };
        for st in TOUCH_STAGES {
            if let Some(v) = self.stages.get(st.name()) {
                row(st.name(), v);
            }
        }
        for st in HAND_STAGES {
            if let Some(v) = self.hand_breakdown.get(st.name()) {
                row(st.name(), v);
            }
        }
        if let Some(v) = &self.end_to_end_touch {
            row("endToEndTouch", v);
        }
        if let Some(v) = &self.end_to_end_hand {
            row("endToEndHand", v);
        }
        let c = &self.counters;
        let _ = writeln!(
            s,
            "frames emitted {} suppressed {} dropped {}; seq gaps {}; pose dropouts {}",
            c.frames_emitted, c.frames_suppressed, c.frames_dropped, c.seq_gaps, c.pose_dropouts
        );
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Runtime(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Thread-safe sample store. With a window, only the most recent samples
/// per metric are kept.
#[derive(Debug, Default)]
pub struct Recorder {
    window: Option<usize>,
    samples: Mutex<BTreeMap<Metric, VecDeque<f64>>>,
    counters: Mutex<Counters>,
    links: Mutex<BTreeMap<String, LinkState>>,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_window(n: usize) -> Self {
        Recorder {
            window: Some(n.max(1)),
            ..Default::default()
        }
    }

    pub fn record(&self, m: Metric, ms: f64) {
        let mut map = self.samples.lock().unwrap();
        let q = map.entry(m).or_default();
        q.push_back(ms);
        if let Some(w) = self.window {
            while q.len() > w {
                q.pop_front();
            }
        }
    }

    pub fn record_duration(&self, m: Metric, d: Duration) {
        self.record(m, d.as_secs_f64() * 1e3);
    }

    pub fn stage(&self, s: Stage, d: Duration) {
        self.record_duration(Metric::Stage(s), d);
    }

    pub fn samples(&self, m: Metric) -> Vec<f64> {
        self.samples
            .lock()
            .unwrap()
            .get(&m)
            .map(|q| q.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn count(&self, m: Metric) -> usize {
        self.samples.lock().unwrap().get(&m).map_or(0, |q| q.len())
    }

    pub fn bump(&self, f: impl FnOnce(&mut Counters)) {
        f(&mut self.counters.lock().unwrap());
    }

    pub fn counters(&self) -> Counters {
        self.counters.lock().unwrap().clone()
    }

    pub fn set_link(&self, name: &str, state: LinkState) {
        self.links.lock().unwrap().insert(name.to_string(), state);
    }

    pub fn report(&self) -> LatencyReport {
        let map = self.samples.lock().unwrap();
        let stats = |m: Metric| {
            map.get(&m)
                .filter(|q| !q.is_empty())
                .map(|q| StageStats::from_samples(&q.iter().copied().collect::<Vec<_>>()))
        };
        let mut r = LatencyReport {
            counters: self.counters(),
            links: self.links.lock().unwrap().clone(),
            ..Default::default()
        };
        for s in TOUCH_STAGES {
            if let Some(st) = stats(Metric::Stage(s)) {
                r.stages.insert(s.name().to_string(), st);
            }
        }
        for s in HAND_STAGES {
            if let Some(st) = stats(Metric::Stage(s)) {
                r.hand_breakdown.insert(s.name().to_string(), st);
            }
        }
        r.end_to_end_touch = stats(Metric::EndToEndTouch);
        r.end_to_end_hand = stats(Metric::EndToEndHand);
        r
    }
}
