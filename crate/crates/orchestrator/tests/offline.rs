use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use empathd_appsim::AppKind;
use empathd_appsim::Scenario;
use empathd_core::meshgen::MeshParams;
use empathd_core::model::io::{save_profile, RgbdSequence};
use empathd_core::scenegen::{orbit_specs, render_sequence, OrbitConfig, SceneSpec};
use empathd_core::{ColorImage, FilterSpec, ImpairmentProfile, Pose};
use empathd_orchestrator::compose::Compositor;
use empathd_orchestrator::offline::OfflinePipeline;
use empathd_orchestrator::{run_offline, Error, Mode, PipelineConfig, Recorder};
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

struct Fixture {
    _dir: tempfile::TempDir,
    frames: PathBuf,
    scenario: PathBuf,
}

/// Ten-frame orbit without a hand, shared by the tests in this file.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let frames = dir.path().join("frames");
        let specs = orbit_specs(&OrbitConfig {
            frames: 10,
            ..Default::default()
        });
        render_sequence(&specs, &frames).unwrap();
        let scenario = dir.path().join("scenario.json");
        let mut s = Scenario::new(AppKind::Grid);
        s.frames = Some(frames.clone());
        s.save(&scenario).unwrap();
        Fixture {
            _dir: dir,
            frames,
            scenario,
        }
    })
}

fn config(out: &Path, profile: Option<&ImpairmentProfile>) -> PipelineConfig {
    let f = fixture();
    let mut cfg = PipelineConfig::new(Mode::Offline, &f.scenario, out);
    if let Some(p) = profile {
        let path = out.with_extension("profile.json");
        save_profile(&path, p).unwrap();
        cfg.profile = Some(path);
    }
    cfg
}

/// Plane-to-image homography from four correspondences.
fn homography(src: [[f64; 2]; 4], dst: [[f64; 2]; 4]) -> Matrix3<f64> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let [x, y] = src[i];
        let [u, v] = dst[i];
        let r0 = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y];
        let r1 = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y];
        for j in 0..8 {
            a[(2 * i, j)] = r0[j];
            a[(2 * i + 1, j)] = r1[j];
        }
        b[2 * i] = u;
        b[2 * i + 1] = v;
    }
    let h = a.lu().solve(&b).unwrap();
    Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0)
}

/// Checks every unambiguous pixel of the content quad against the texel a
/// homography predicts; returns the number of pixels checked.
fn check_against_homography(comp: &Compositor, pose: &Pose, screen: &ColorImage, out: &ColorImage) -> usize {
    let k = comp.intrinsics;
    let project = |p: &Vector3<f64>| [k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy];
    let corners = comp.content_corners(pose).map(|c| project(&c));
    let h = homography([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], corners);
    let inv = h.try_inverse().unwrap();
    let (tw, th) = (screen.width as f64, screen.height as f64);
    let mut checked = 0;
    for y in 0..k.height {
        for x in 0..k.width {
            let p = inv * Vector3::new(x as f64, y as f64, 1.0);
            let (u, v) = (p.x / p.z, p.y / p.z);
            if !(0.002..0.998).contains(&u) || !(0.002..0.998).contains(&v) {
                continue;
            }
            let (su, sv) = (u * tw, v * th);
            if (su - su.round()).abs() < 1e-3 || (sv - sv.round()).abs() < 1e-3 {
                continue;
            }
            let tx = (su - 0.5).round() as u32;
            let ty = (sv - 0.5).round() as u32;
            assert_eq!(out.get(x, y), screen.get(tx, ty), "pixel ({x},{y}) -> texel ({tx},{ty})");
            checked += 1;
        }
    }
    checked
}

#[test]
fn unoccluded_screen_matches_scaled_app_exactly() {
    let f = fixture();
    let scenario = Scenario::load(&f.scenario).unwrap();
    let seq = RgbdSequence::open(&f.frames).unwrap();
    let mut pipe = OfflinePipeline::new(&scenario, seq.intrinsics, MeshParams::default()).unwrap();
    let rec = Recorder::new();
    let profile = ImpairmentProfile::default();
    for n in 0..seq.len() {
        let res = pipe.step(n, || Ok(seq.load(n)?), &profile, &rec).unwrap().unwrap();
        let checked = check_against_homography(&pipe.compositor, &res.pose, pipe.screen(), &res.raw);
        assert!(checked > 5_000, "frame {n}: only {checked} pixels checked");
        assert_eq!(res.raw, res.filtered, "empty profile must be the identity");
    }
}

#[test]
fn ten_frames_in_ten_frames_out() {
    let out = tempfile::tempdir().unwrap();
    let run = run_offline(&config(out.path(), None)).unwrap();
    assert_eq!(run.frames_in, 10);
    assert_eq!(run.outputs.len(), 10);
    for (_, p) in &run.outputs {
        assert!(p.exists());
    }
    assert!(out.path().join("timing.jsonl").exists());
    assert!(out.path().join("report.json").exists());
    let report = run.report;
    assert_eq!(report.end_to_end_hand.unwrap().count, 10);
    assert_eq!(report.counters.pose_dropouts, 0);
    assert!(report.violations().is_empty(), "{:?}", report.violations());
}

#[test]
fn full_glaucoma_blacks_out_corners() {
    let out = tempfile::tempdir().unwrap();
    let profile = ImpairmentProfile::new(vec![FilterSpec::glaucoma_from_severity(1.0)]);
    let run = run_offline(&config(out.path(), Some(&profile))).unwrap();
    for (_, p) in &run.outputs {
        let img = ColorImage::decode_png(&std::fs::read(p).unwrap()).unwrap();
        let (w, h) = (img.width - 1, img.height - 1);
        for (x, y) in [(0, 0), (w, 0), (0, h), (w, h)] {
            assert_eq!(img.get(x, y), [0.0; 3], "{} corner ({x},{y})", p.display());
        }
    }
}

#[test]
fn reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_offline(&config(a.path(), None)).unwrap();
    let rb = run_offline(&config(b.path(), None)).unwrap();
    assert_eq!(ra.outputs.len(), rb.outputs.len());
    for ((_, pa), (_, pb)) in ra.outputs.iter().zip(&rb.outputs) {
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    }
}

#[test]
fn lost_phone_reuses_pose_or_skips() {
    let dir = tempfile::tempdir().unwrap();
    let away = Pose::looking_at_phone(Vector3::new(0.0, 0.0, 0.3), 0.0, 3.0, 0.0);
    let good = Pose::looking_at_phone(Vector3::new(0.0, 0.0, 0.3), 0.1, 0.1, 0.0);
    let specs: Vec<SceneSpec> = [away, good, away, good].into_iter().map(SceneSpec::new).collect();
    let frames = dir.path().join("frames");
    render_sequence(&specs, &frames).unwrap();
    let mut cfg = config(&dir.path().join("out"), None);
    cfg.frames = Some(frames);
    let run = run_offline(&cfg).unwrap();
    assert_eq!(run.outputs.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert_eq!(run.report.counters.frames_skipped, 1);
    assert_eq!(run.report.counters.pose_dropouts, 1);
}

#[test]
fn bad_inputs_are_config_errors() {
    let out = tempfile::tempdir().unwrap();
    let missing = PipelineConfig::new(Mode::Offline, out.path().join("nope.json"), out.path());
    let err = run_offline(&missing).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert_eq!(err.exit_code(), 2);

    let scenario = out.path().join("bare.json");
    Scenario::new(AppKind::Grid).save(&scenario).unwrap();
    let no_frames = PipelineConfig::new(Mode::Offline, &scenario, out.path());
    assert_eq!(run_offline(&no_frames).unwrap_err().exit_code(), 2);

    let mut bad_profile = config(&out.path().join("o"), None);
    let p = out.path().join("bad.json");
    std::fs::write(&p, r#"{"filters":[{"type":"Glaucoma","innerRadiusFrac":0.8,"outerRadiusFrac":0.2,"blurSigmaPx":2}]}"#).unwrap();
    bad_profile.profile = Some(p);
    assert_eq!(run_offline(&bad_profile).unwrap_err().exit_code(), 2);
}
