use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rigid transform taking phone-frame points into the camera frame:
/// `p_cam = rotation * p_phone + translation`.
///
/// Phone frame: origin at the screen centre, x right, y up (portrait), z out
/// of the screen toward the viewer. Camera frame: x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

/// On-disk layout: `{"T": [x, y, z], "R": [row-major 3x3]}`.
#[derive(Serialize, Deserialize)]
struct PoseRepr {
    #[serde(rename = "T")]
    t: [f64; 3],
    #[serde(rename = "R")]
    r: [f64; 9],
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        PoseRepr {
            t: p.translation.into(),
            r: p.rotation_row_major(),
        }
    }
}

impl TryFrom<PoseRepr> for Pose {
    type Error = Error;

    fn try_from(r: PoseRepr) -> Result<Self> {
        Pose::from_row_major(r.t, r.r)
    }
}

const ORTHO_TOL: f64 = 1e-6;

impl Pose {
    pub fn identity() -> Self {
        Pose {
            translation: Vector3::zeros(),
            rotation: Matrix3::identity(),
        }
    }

    /// Validating constructor.
    pub fn new(translation: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self> {
        let p = Pose {
            translation,
            rotation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_row_major(t: [f64; 3], r: [f64; 9]) -> Result<Self> {
        Pose::new(Vector3::from(t), Matrix3::from_row_slice(&r))
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let m = &self.rotation;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Phone upright and facing the camera at `distance` metres along the
    /// optical axis: phone x maps to camera x, phone y (up) to camera -y and
    /// the screen normal points back at the camera.
    pub fn frontal(distance: f64) -> Self {
        Pose {
            translation: Vector3::new(0.0, 0.0, distance),
            rotation: Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)),
        }
    }

    /// Frontal pose followed by rotations about the phone's own axes:
    /// `yaw` about phone y, `pitch` about phone x, `roll` about phone z
    /// (radians, applied roll then pitch then yaw in the phone frame).
    pub fn looking_at_phone(translation: Vector3<f64>, yaw: f64, pitch: f64, roll: f64) -> Self {
        let local = Rotation3::from_axis_angle(&Vector3::y_axis(), yaw)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), pitch)
            * Rotation3::from_axis_angle(&Vector3::z_axis(), roll);
        let base = Pose::frontal(0.0).rotation;
        Pose {
            translation,
            rotation: base * local.into_inner(),
        }
    }

    pub fn from_axis_angle(translation: Vector3<f64>, axis: Vector3<f64>, angle: f64) -> Self {
        let rot = if axis.norm() < 1e-15 {
            Matrix3::identity()
        } else {
            Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
        };
        Pose {
            translation,
            rotation: rot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry("pose translation not finite".into()));
        }
        let err = self.orthonormality_error();
        if !(err < ORTHO_TOL) {
            return Err(Error::Geometry(format!(
                "rotation not orthonormal (|RtR - I|inf = {err:e})"
            )));
        }
        let det = self.rotation.determinant();
        if !((det - 1.0).abs() < ORTHO_TOL) {
            return Err(Error::Geometry(format!("rotation determinant {det} != +1")));
        }
        Ok(())
    }

    /// Max-abs entry of `RᵀR − I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }

    /// `p ↦ R·p + T`.
    #[inline]
    pub fn from_phone_coords(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `p ↦ R⁻¹·(p − T)`, using `Rᵀ` as the inverse rotation.
    #[inline]
    pub fn to_phone_coords(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.rotation * other.translation + self.translation,
            rotation: self.rotation * other.rotation,
        }
        .renormalized()
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            translation: -(rt * self.translation),
            rotation: rt,
        }
    }

    /// Projects the rotation back onto SO(3) (nearest rotation in Frobenius norm).
    pub fn renormalized(self) -> Pose {
        Pose {
            translation: self.translation,
            rotation: nearest_rotation(&self.rotation),
        }
    }

    /// Screen normal (phone +z) in camera coordinates.
    pub fn normal(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    /// Angle of the relative rotation between two poses, radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    pub fn translation_distance_to(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// Translates the pose along the camera's optical axis; used to move
    /// content from the depth camera into the viewer's eye frame.
    pub fn offset_depth(&self, dz: f64) -> Pose {
        Pose {
            translation: self.translation + Vector3::new(0.0, 0.0, dz),
            rotation: self.rotation,
        }
    }
}

pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * v_t;
    }
    r
}
