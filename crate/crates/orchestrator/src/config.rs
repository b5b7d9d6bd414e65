use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use empathd_appsim::Scenario;
use empathd_core::meshgen::MeshParams;
use empathd_core::model::io::load_profile;
use empathd_core::ImpairmentProfile;

use crate::{Error, Result};

pub const DEFAULT_AGENT_PORT: u16 = 7001;
pub const DEFAULT_SINK_PORT: u16 = 7002;
pub const DEFAULT_API_PORT: u16 = 8080;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Offline,
    Live,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(Mode::Offline),
            "live" => Ok(Mode::Live),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ports {
    pub agent: u16,
    pub sink: u16,
    pub api: u16,
}

impl Default for Ports {
    fn default() -> Self {
        Ports {
            agent: DEFAULT_AGENT_PORT,
            sink: DEFAULT_SINK_PORT,
            api: DEFAULT_API_PORT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub scenario: PathBuf,
    pub profile: Option<PathBuf>,
    pub ports: Ports,
    pub sink_host: String,
    /// RGB-D sequence; overrides the scenario's `frames`.
    pub frames: Option<PathBuf>,
    pub out: PathBuf,
    /// Defaults to `out/report.json`.
    pub report: Option<PathBuf>,
    pub mesh: MeshParams,
    /// Exponential pose smoothing factor in (0, 1]; `None` disables it.
    pub pose_smoothing: Option<f64>,
}

impl PipelineConfig {
    pub fn new(mode: Mode, scenario: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            mode,
            scenario: scenario.into(),
            profile: None,
            ports: Ports::default(),
            sink_host: "127.0.0.1".into(),
            frames: None,
            out: out.into(),
            report: None,
            mesh: MeshParams::default(),
            pose_smoothing: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        must_exist("scenario", &self.scenario)?;
        if let Some(p) = &self.profile {
            must_exist("profile", p)?;
        }
        if let Some(p) = &self.frames {
            must_exist("frames", p)?;
        }
        let p = self.ports;
        let distinct: HashSet<u16> = [p.agent, p.sink, p.api].into_iter().collect();
        if distinct.len() != 3 {
            return Err(Error::Config(format!(
                "ports must be distinct (agent {}, sink {}, api {})",
                p.agent, p.sink, p.api
            )));
        }
        if self.mesh.stride == 0 {
            return Err(Error::Config("mesh stride must be at least 1".into()));
        }
        if let Some(a) = self.pose_smoothing {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("pose smoothing {a} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn load_scenario(&self) -> Result<Scenario> {
        Ok(Scenario::load(&self.scenario)?)
    }

    pub fn load_profile(&self) -> Result<ImpairmentProfile> {
        let profile = match &self.profile {
            Some(p) => load_profile(p)?,
            None => ImpairmentProfile::default(),
        };
        let v = empathd_core::model::validate_profile(&profile);
        if !v.is_empty() {
            let list: Vec<String> = v.iter().map(|x| format!("{}: {}", x.field, x.rule)).collect();
            return Err(Error::Config(format!("invalid profile: {}", list.join("; "))));
        }
        Ok(profile)
    }

    pub fn frames_dir(&self, scenario: &Scenario) -> Option<PathBuf> {
        self.frames.clone().or_else(|| scenario.frames.clone())
    }

    pub fn report_path(&self) -> PathBuf {
        self.report.clone().unwrap_or_else(|| self.out.join(REPORT_FILE))
    }
}

fn must_exist(what: &str, p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", p.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("s.json");
        std::fs::write(&s, r#"{"app":"grid"}"#).unwrap();
        let mut cfg = PipelineConfig::new(Mode::Live, &s, dir.path().join("out"));
        cfg.validate().unwrap();
        assert_eq!(cfg.report_path(), dir.path().join("out").join(REPORT_FILE));

        cfg.ports.sink = cfg.ports.agent;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.ports = Ports::default();
        cfg.profile = Some(dir.path().join("missing.json"));
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.profile = None;
        cfg.pose_smoothing = Some(0.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn invalid_profile_file_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("s.json");
        std::fs::write(&s, r#"{"app":"grid"}"#).unwrap();
        let p = dir.path().join("p.json");
        std::fs::write(
            &p,
            r#"{"filters":[{"type":"Cataract","blurSigmaPx":-1,"contrastFactor":1}]}"#,
        )
        .unwrap();
        let mut cfg = PipelineConfig::new(Mode::Offline, &s, dir.path());
        cfg.profile = Some(p);
        let e = cfg.load_profile().unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("offline".parse::<Mode>().unwrap(), Mode::Offline);
        assert!("batch".parse::<Mode>().is_err());
    }
}
