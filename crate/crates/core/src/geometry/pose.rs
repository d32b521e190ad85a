use std::f64::consts::PI;

use nalgebra::{Isometry3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Wraps an angle into `(-PI, PI]`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Rigid pose as position plus roll/pitch/yaw (extrinsic x-y-z, i.e.
/// `R = Rz(yaw) * Ry(pitch) * Rx(roll)`).
///
/// Serialized as a flat `[x, y, z, roll, pitch, yaw]` array.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct Pose6D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Pose6D {
    pub fn new(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            roll: normalize_angle(roll),
            pitch: normalize_angle(pitch),
            yaw: normalize_angle(yaw),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(t.x, t.y, t.z, 0.0, 0.0, 0.0)
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.x, self.y, self.z, self.roll, self.pitch, self.yaw]
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let t = iso.translation.vector;
        let (roll, pitch, yaw) = iso.rotation.euler_angles();
        Self::new(t.x, t.y, t.z, roll, pitch, yaw)
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.translation()),
            UnitQuaternion::from_rotation_matrix(&self.rotation()),
        )
    }

    /// Maps a body-frame point into the world frame.
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p + self.translation()
    }

    pub fn translated(&self, d: &Vec3) -> Self {
        Self {
            x: self.x + d.x,
            y: self.y + d.y,
            z: self.z + d.z,
            ..*self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::Format(format!("non-finite pose {:?}", self.to_array())));
        }
        Ok(())
    }
}

impl From<[f64; 6]> for Pose6D {
    fn from(a: [f64; 6]) -> Self {
        Pose6D::from_array(a)
    }
}

impl From<Pose6D> for [f64; 6] {
    fn from(p: Pose6D) -> Self {
        p.to_array()
    }
}

/// Per-component scaling of pose displacements. The default emphasizes vertical motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct WeightVector([f64; 6]);

impl WeightVector {
    pub const ONES: WeightVector = WeightVector([1.0; 6]);

    pub fn new(w: [f64; 6]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weight components must be finite and >= 0, got {w:?}"
            )));
        }
        Ok(Self(w))
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.0
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn is_translation_isotropic_xy(&self) -> bool {
        self.0[0] == self.0[1]
    }
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector([1.0, 1.0, 2.0, 1.0, 1.0, 1.0])
    }
}

impl TryFrom<[f64; 6]> for WeightVector {
    type Error = Error;
    fn try_from(w: [f64; 6]) -> Result<Self> {
        WeightVector::new(w)
    }
}

impl From<WeightVector> for [f64; 6] {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl std::str::FromStr for WeightVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidConfig(format!("bad weight `{p}`: {e}")))
            })
            .collect::<Result<_>>()?;
        let arr: [f64; 6] = parts
            .try_into()
            .map_err(|v: Vec<f64>| Error::InvalidConfig(format!("expected 6 weights, got {}", v.len())))?;
        WeightVector::new(arr)
    }
}

/// Weighted pose: `p0 + diag(w) * (pi - p0)`.
///
/// Angular differences are taken on the shortest arc before scaling, and the
/// resulting angles are wrapped back into `(-PI, PI]`.
pub fn apply_pose_weights(p0: &Pose6D, pi: &Pose6D, w: &WeightVector) -> Pose6D {
    let a = p0.to_array();
    let b = pi.to_array();
    let w = w.as_array();
    let mut out = [0.0; 6];
    for k in 0..6 {
        let diff = if k < 3 { b[k] - a[k] } else { normalize_angle(b[k] - a[k]) };
        out[k] = a[k] + w[k] * diff;
    }
    Pose6D::from_array(out)
}
