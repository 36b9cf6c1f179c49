use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum allowed deviation of a quaternion's norm from 1.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PoseError {
    #[error("orientation quaternion has norm {norm}, expected 1")]
    NonUnitQuaternion { norm: f64 },
    #[error("pose contains a non-finite component")]
    NonFiniteComponent,
}

impl PoseError {
    pub fn code(&self) -> &'static str {
        match self {
            PoseError::NonUnitQuaternion { .. } => "NonUnitQuaternion",
            PoseError::NonFiniteComponent => "NonFiniteComponent",
        }
    }
}

/// Rotation quaternion stored scalar-first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Rotation of `angle` radians about `axis`. The axis need not be normalized.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if len == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let k = s / len;
        Self::new(c, axis[0] * k, axis[1] * k, axis[2] * k)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    /// Composition `self * other`.
    pub fn mul(&self, o: &Quaternion) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }

    fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

/// A rigid placement in the right-handed world frame. Position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseWire", into = "PoseWire")]
pub struct Pose {
    pub position: [f64; 3],
    pub orientation: Quaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: [0.0, 0.0, 0.0],
        orientation: Quaternion::IDENTITY,
    };

    pub const fn new(position: [f64; 3], orientation: Quaternion) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self::new([x, y, z], Quaternion::IDENTITY)
    }

    pub fn validate(&self) -> Result<(), PoseError> {
        validate_pose(self)
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        let d: f64 = self
            .position
            .iter()
            .zip(other.position.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d.sqrt()
    }
}

pub fn validate_pose(pose: &Pose) -> Result<(), PoseError> {
    let finite = pose
        .position
        .iter()
        .chain(pose.orientation.components().iter())
        .all(|c| c.is_finite());
    if !finite {
        return Err(PoseError::NonFiniteComponent);
    }
    let norm = pose.orientation.norm();
    if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
        return Err(PoseError::NonUnitQuaternion { norm });
    }
    Ok(())
}

/// Flat wire form shared by the HTTP API, CSV rows and scene files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct PoseWire {
    px: f64,
    py: f64,
    pz: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
}

impl From<PoseWire> for Pose {
    fn from(w: PoseWire) -> Self {
        Pose::new([w.px, w.py, w.pz], Quaternion::new(w.qw, w.qx, w.qy, w.qz))
    }
}

impl From<Pose> for PoseWire {
    fn from(p: Pose) -> Self {
        PoseWire {
            px: p.position[0],
            py: p.position[1],
            pz: p.position[2],
            qw: p.orientation.w,
            qx: p.orientation.x,
            qy: p.orientation.y,
            qz: p.orientation.z,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pose_is_valid() {
        assert_eq!(validate_pose(&Pose::IDENTITY), Ok(()));
    }

    #[test]
    fn scaled_quaternion_is_rejected() {
        let p = Pose::new([0.0; 3], Quaternion::new(2.0, 0.0, 0.0, 0.0));
        assert!(matches!(
            validate_pose(&p),
            Err(PoseError::NonUnitQuaternion { norm }) if norm == 2.0
        ));
    }

    #[test]
    fn nan_position_is_rejected() {
        let p = Pose::at(f64::NAN, 0.0, 0.0);
        assert_eq!(validate_pose(&p), Err(PoseError::NonFiniteComponent));
        let p = Pose::new([0.0; 3], Quaternion::new(f64::INFINITY, 0.0, 0.0, 0.0));
        assert_eq!(validate_pose(&p), Err(PoseError::NonFiniteComponent));
    }

    #[test]
    fn norm_tolerance_boundary() {
        let inside = Pose::new([0.0; 3], Quaternion::new(1.0 + 5e-7, 0.0, 0.0, 0.0));
        let outside = Pose::new([0.0; 3], Quaternion::new(1.0 + 5e-6, 0.0, 0.0, 0.0));
        assert!(inside.validate().is_ok());
        assert!(outside.validate().is_err());
    }

    #[test]
    fn axis_angle_is_unit() {
        let q = Quaternion::from_axis_angle([0.3, -1.0, 2.0], 1.234);
        assert!((q.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wire_form_is_flat() {
        let p = Pose::at(1.0, 2.0, 3.0);
        let v = serde_json::to_value(p).unwrap();
        assert_eq!(v["px"], 1.0);
        assert_eq!(v["qw"], 1.0);
        let back: Pose = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
