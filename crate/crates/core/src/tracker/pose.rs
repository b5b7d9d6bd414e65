use nalgebra::{Matrix3, Matrix6, Rotation3, Vector3, Vector6};

use super::MarkerDetection;
use crate::geom::{Homography, Point2};
use crate::model::{CameraIntrinsics, PhoneGeometry, Pose};
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 20;
const STEP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub pose: Pose,
    /// Root-mean-square corner re-projection error, pixels.
    pub rms_residual_px: f64,
    pub iterations: usize,
}

/// Estimates the phone pose from detected marker corners: normalised DLT
/// homography, decomposition against the intrinsics, then Gauss–Newton on
/// the re-projection error.
pub fn estimate_pose(
    detections: &[MarkerDetection],
    geometry: &PhoneGeometry,
    intrinsics: &CameraIntrinsics,
) -> Result<PoseEstimate> {
    let mut object = Vec::new();
    let mut image = Vec::new();
    for d in detections {
        let Some(m) = geometry.marker(d.marker_id) else {
            continue;
        };
        object.extend_from_slice(&m.corners);
        image.extend_from_slice(&d.corners);
    }
    if object.len() < 4 {
        return Err(Error::Estimation(format!(
            "{} corners available, at least 4 required",
            object.len()
        )));
    }
    let initial = initial_pose(&object, &image, intrinsics)?;
    refine(initial, &object, &image, intrinsics)
}

fn initial_pose(object: &[Point2], image: &[Point2], k: &CameraIntrinsics) -> Result<Pose> {
    let h = Homography::estimate(object, image)
        .ok_or_else(|| Error::Estimation("degenerate corner configuration".into()))?;
    let k_inv = Matrix3::new(
        1.0 / k.fx,
        0.0,
        -k.cx / k.fx,
        0.0,
        1.0 / k.fy,
        -k.cy / k.fy,
        0.0,
        0.0,
        1.0,
    );
    let m = k_inv * h.0;
    let h1: Vector3<f64> = m.column(0).into();
    let h2: Vector3<f64> = m.column(1).into();
    let h3: Vector3<f64> = m.column(2).into();
    let mut scale = 2.0 / (h1.norm() + h2.norm());
    // The screen must sit in front of the camera.
    if h3.z * scale < 0.0 {
        scale = -scale;
    }
    let r1 = h1 * scale;
    let r2 = h2 * scale;
    let t = h3 * scale;
    let r3 = r1.cross(&r2);
    let raw = Matrix3::from_columns(&[r1, r2, r3]);
    let rotation = crate::model::pose_nearest_rotation(&raw);
    if !rotation.iter().all(|v| v.is_finite()) || !t.iter().all(|v| v.is_finite()) {
        return Err(Error::Estimation("homography decomposition failed".into()));
    }
    Ok(Pose {
        translation: t,
        rotation,
    })
}

fn refine(
    mut pose: Pose,
    object: &[Point2],
    image: &[Point2],
    k: &CameraIntrinsics,
) -> Result<PoseEstimate> {
    let mut iterations = 0;
    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for (o, px) in object.iter().zip(image) {
            let p_rot = pose.rotation * Vector3::new(o[0], o[1], 0.0);
            let p = p_rot + pose.translation;
            if p.z <= 1e-9 {
                return Err(Error::Estimation("corner moved behind the camera".into()));
            }
            let iz = 1.0 / p.z;
            let r = [
                k.fx * p.x * iz + k.cx - px[0],
                k.fy * p.y * iz + k.cy - px[1],
            ];
            // d(pixel)/d(p_cam)
            let du = Vector3::new(k.fx * iz, 0.0, -k.fx * p.x * iz * iz);
            let dv = Vector3::new(0.0, k.fy * iz, -k.fy * p.y * iz * iz);
            // Left-multiplied rotation increment: dp/dω = −[R·o]×, dp/dt = I.
            for (grad, res) in [(du, r[0]), (dv, r[1])] {
                let dw = p_rot.cross(&grad);
                let row = Vector6::new(dw.x, dw.y, dw.z, grad.x, grad.y, grad.z);
                jtj += row * row.transpose();
                jtr += row * res;
            }
        }
        let Some(delta) = jtj.cholesky().map(|c| c.solve(&(-jtr))) else {
            return Err(Error::Estimation("normal equations are singular".into()));
        };
        let omega = Vector3::new(delta[0], delta[1], delta[2]);
        let dt = Vector3::new(delta[3], delta[4], delta[5]);
        let rot = Rotation3::from_scaled_axis(omega).into_inner();
        pose = Pose {
            translation: pose.translation + dt,
            rotation: rot * pose.rotation,
        }
        .renormalized();
        if delta.norm() < STEP_TOLERANCE {
            break;
        }
    }
    let rms = reprojection_rms(&pose, object, image, k);
    Ok(PoseEstimate {
        pose,
        rms_residual_px: rms,
        iterations,
    })
}

/// RMS pixel distance between projected phone-plane points and observations.
pub fn reprojection_rms(
    pose: &Pose,
    object: &[Point2],
    image: &[Point2],
    k: &CameraIntrinsics,
) -> f64 {
    let mut sum = 0.0;
    for (o, px) in object.iter().zip(image) {
        let p = pose.from_phone_coords(&Vector3::new(o[0], o[1], 0.0));
        match k.project(&p) {
            Some(uv) => sum += (uv[0] - px[0]).powi(2) + (uv[1] - px[1]).powi(2),
            None => return f64::INFINITY,
        }
    }
    (sum / object.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn synth(pose: &Pose, g: &PhoneGeometry, k: &CameraIntrinsics) -> Vec<MarkerDetection> {
        g.marker_layout
            .iter()
            .map(|m| {
                let mut corners = [[0.0; 2]; 4];
                for (i, c) in m.corners.iter().enumerate() {
                    corners[i] = k
                        .project(&pose.from_phone_coords(&Vector3::new(c[0], c[1], 0.0)))
                        .unwrap();
                }
                MarkerDetection {
                    marker_id: m.marker_id,
                    corners,
                }
            })
            .collect()
    }

    #[test]
    fn recovers_identity_rotation_pose() {
        let g = PhoneGeometry::default();
        let k = CameraIntrinsics::default();
        let truth = Pose::new(Vector3::new(0.0, 0.0, 0.30), Matrix3::identity()).unwrap();
        let est = estimate_pose(&synth(&truth, &g, &k), &g, &k).unwrap();
        assert!(est.pose.translation_distance_to(&truth) < 1e-4);
        assert!(est.pose.rotation_angle_to(&truth) < 1e-3);
    }

    #[test]
    fn recovers_oblique_pose_exactly() {
        let g = PhoneGeometry::default();
        let k = CameraIntrinsics::default();
        let truth = Pose::looking_at_phone(Vector3::new(0.02, -0.01, 0.35), 0.5, -0.3, 0.2);
        let est = estimate_pose(&synth(&truth, &g, &k), &g, &k).unwrap();
        assert!(est.pose.translation_distance_to(&truth) < 1e-9);
        assert!(est.pose.rotation_angle_to(&truth) < 1e-9);
        assert!(est.rms_residual_px < 1e-8);
    }

    #[test]
    fn three_corners_is_an_error() {
        let g = PhoneGeometry::default();
        let k = CameraIntrinsics::default();
        let mut dets = synth(&Pose::frontal(0.3), &g, &k);
        dets.truncate(1);
        // Drop to three usable corners by pointing the id at nothing.
        let mut bogus = dets[0].clone();
        bogus.marker_id = 999;
        assert!(matches!(estimate_pose(&[bogus], &g, &k), Err(Error::Estimation(_))));
        assert!(estimate_pose(&[], &g, &k).is_err());
    }

    #[test]
    fn collinear_corners_are_degenerate() {
        let k = CameraIntrinsics::default();
        let mut g = PhoneGeometry::default();
        g.marker_layout.truncate(1);
        let det = MarkerDetection {
            marker_id: g.marker_layout[0].marker_id,
            corners: [[10.0, 10.0], [20.0, 20.0], [30.0, 30.0], [40.0, 40.0]],
        };
        assert!(estimate_pose(&[det], &g, &k).is_err());
    }

    #[test]
    fn invariant_to_detection_order() {
        let g = PhoneGeometry::default();
        let k = CameraIntrinsics::default();
        let truth = Pose::looking_at_phone(Vector3::new(0.0, 0.01, 0.3), 0.3, 0.2, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut dets = synth(&truth, &g, &k);
        for d in &mut dets {
            for c in &mut d.corners {
                c[0] += rng.sample::<f64, _>(StandardNormal) * 0.4;
                c[1] += rng.sample::<f64, _>(StandardNormal) * 0.4;
            }
        }
        let a = estimate_pose(&dets, &g, &k).unwrap().pose;
        dets.reverse();
        dets.swap(1, 5);
        let b = estimate_pose(&dets, &g, &k).unwrap().pose;
        assert!(a.translation_distance_to(&b) < 1e-6);
        assert!((a.rotation - b.rotation).amax() < 1e-6);
    }

    #[test]
    fn residual_no_worse_than_truth() {
        let g = PhoneGeometry::default();
        let k = CameraIntrinsics::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let truth = Pose::looking_at_phone(
                Vector3::new(rng.gen_range(-0.03..0.03), rng.gen_range(-0.03..0.03), rng.gen_range(0.25..0.4)),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.5..0.5),
            );
            let mut dets = synth(&truth, &g, &k);
            for d in &mut dets {
                for c in &mut d.corners {
                    c[0] += rng.sample::<f64, _>(StandardNormal) * 0.5;
                    c[1] += rng.sample::<f64, _>(StandardNormal) * 0.5;
                }
            }
            let est = estimate_pose(&dets, &g, &k).unwrap();
            let (obj, img): (Vec<Point2>, Vec<Point2>) = dets
                .iter()
                .flat_map(|d| {
                    let m = g.marker(d.marker_id).unwrap();
                    m.corners.into_iter().zip(d.corners)
                })
                .unzip();
            let truth_rms = reprojection_rms(&truth, &obj, &img, &k);
            assert!(est.rms_residual_px <= truth_rms + 1e-3);
        }
    }

    #[test]
    fn noise_never_improves_median_error() {
        let g = PhoneGeometry::default();
        let k = CameraIntrinsics::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trials: Vec<(Pose, Vec<f64>)> = (0..60)
            .map(|_| {
                let pose = Pose::looking_at_phone(
                    Vector3::new(rng.gen_range(-0.02..0.02), rng.gen_range(-0.02..0.02), rng.gen_range(0.25..0.4)),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.3..0.3),
                    0.0,
                );
                let z: Vec<f64> = (0..64).map(|_| rng.sample(StandardNormal)).collect();
                (pose, z)
            })
            .collect();
        let median_error = |sigma: f64| {
            let mut errs: Vec<f64> = trials
                .iter()
                .map(|(pose, z)| {
                    let mut dets = synth(pose, &g, &k);
                    let mut zi = z.iter();
                    for d in &mut dets {
                        for c in &mut d.corners {
                            c[0] += sigma * zi.next().unwrap();
                            c[1] += sigma * zi.next().unwrap();
                        }
                    }
                    estimate_pose(&dets, &g, &k).unwrap().pose.translation_distance_to(pose)
                })
                .collect();
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            errs[errs.len() / 2]
        };
        let e0 = median_error(0.0);
        let e1 = median_error(0.5);
        let e2 = median_error(1.0);
        assert!(e0 <= e1 && e1 <= e2, "{e0} {e1} {e2}");
    }
}
