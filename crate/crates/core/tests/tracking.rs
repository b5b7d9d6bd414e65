use std::time::Instant;

use empathd_core::model::Pose;
use empathd_core::scenegen::{orbit_specs, render, OrbitConfig, SceneSpec};
use empathd_core::tracker::{detect_markers, estimate_pose, project_screen_border};
use nalgebra::Vector3;

#[test]
fn orbit_corners_and_poses_match_truth() {
    let specs = orbit_specs(&OrbitConfig::default());
    let start = Instant::now();
    let mut worst_t = 0.0f64;
    let mut worst_r = 0.0f64;
    let mut worst_px = 0.0f64;
    for spec in &specs {
        let (frame, truth) = render(spec).unwrap();
        let dets = detect_markers(&frame.color, &spec.phone_geometry);
        assert!(dets.len() >= 6, "only {} markers found", dets.len());
        for d in &dets {
            let t = truth.marker_corners_px[&d.marker_id];
            for (a, b) in d.corners.iter().zip(&t) {
                worst_px = worst_px.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        let est = estimate_pose(&dets, &spec.phone_geometry, &spec.intrinsics).unwrap();
        worst_t = worst_t.max(est.pose.translation_distance_to(&truth.pose));
        worst_r = worst_r.max(est.pose.rotation_angle_to(&truth.pose).to_degrees());
    }
    eprintln!(
        "orbit: worst corner {worst_px:.3} px, translation {:.3} mm, rotation {worst_r:.3} deg, {:?}",
        worst_t * 1000.0,
        start.elapsed()
    );
    assert!(worst_px <= 0.5);
    assert!(worst_t <= 0.005);
    assert!(worst_r <= 2.0);
}

#[test]
fn noiseless_frontal_frame_meets_tight_pose_tolerance() {
    let spec = SceneSpec::new(Pose::frontal(0.3));
    let (frame, truth) = render(&spec).unwrap();
    let dets = detect_markers(&frame.color, &spec.phone_geometry);
    let est = estimate_pose(&dets, &spec.phone_geometry, &spec.intrinsics).unwrap();
    assert!(est.pose.translation_distance_to(&truth.pose) <= 0.001);
    assert!(est.pose.rotation_angle_to(&truth.pose).to_degrees() <= 0.1);
}

#[test]
fn yawed_border_matches_truth_projection() {
    let pose = Pose::looking_at_phone(Vector3::new(0.0, 0.0, 0.3), 45f64.to_radians(), 0.0, 0.0);
    let spec = SceneSpec::new(pose);
    let (frame, truth) = render(&spec).unwrap();
    let dets = detect_markers(&frame.color, &spec.phone_geometry);
    let est = estimate_pose(&dets, &spec.phone_geometry, &spec.intrinsics).unwrap();
    let got = project_screen_border(&est.pose, &spec.phone_geometry, &spec.intrinsics).unwrap();
    let want = project_screen_border(&truth.pose, &spec.phone_geometry, &spec.intrinsics).unwrap();
    assert_eq!(got.len(), 4);
    for (a, b) in got.iter().zip(&want) {
        assert!(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() < 0.5);
    }
    // Trapezoid: the near vertical edge is longer than the far one.
    let left = (want[3][1] - want[0][1]).abs();
    let right = (want[2][1] - want[1][1]).abs();
    assert!((left - right).abs() > 5.0);
}
