//! Rigid-body pose math: vectors, quaternions, poses and unit dual quaternions.
//!
//! Conventions used throughout the crate:
//!
//! * Poses compose as `parent ∘ child`: the child is expressed in the parent's
//!   frame, so `parent.compose(&child)` maps child-local points to world space.
//! * A unit dual quaternion stores `real = r` and `dual = ½·t·r`, where `t` is
//!   the translation as a pure quaternion. [`DualQuat::mul`] follows the same
//!   `parent ∘ child` order as [`Pose::compose`].
//! * The local forward axis is `+Z`, world up is `+Y`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when validating caller-supplied unit quaternions.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Deviation from the unit conditions attributable to floating-point rounding.
const ROUNDING_TOLERANCE: f64 = 1e-12;

/// Rotation angles below this (radians) are treated as pure translations by
/// [`DualQuat::sclerp`].
const SCREW_ANGLE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).length()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Unit vector in the same direction, or `None` for (near) zero length.
    pub fn normalized(self) -> Option<Vec3> {
        let len = self.length();
        (len > 1e-12).then(|| self.scale(1.0 / len))
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self).scale(t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// General (not necessarily unit) quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const ZERO: Quat = Quat { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn pure(v: Vec3) -> Self {
        Quat::new(0.0, v.x, v.y, v.z)
    }

    pub fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn conj(self) -> Quat {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn scale(self, s: f64) -> Quat {
        Quat::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        Quat::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self.scale(-1.0)
    }
}

/// Hamilton product.
impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

/// Rotation quaternion. `q` and `-q` denote the same rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Quat", into = "Quat")]
pub struct UnitQuat(Quat);

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat(Quat::IDENTITY);

    /// Checks that `q` is unit within [`UNIT_TOLERANCE`], then renormalizes.
    /// Inputs already unit to rounding error are kept bit-for-bit.
    pub fn new(q: Quat) -> Result<Self, MathError> {
        let n = q.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(MathError::InvalidInput(format!(
                "quaternion norm {n} is not unit"
            )));
        }
        if (n - 1.0).abs() <= ROUNDING_TOLERANCE {
            return Ok(UnitQuat(q));
        }
        Ok(UnitQuat(q.scale(1.0 / n)))
    }

    /// Normalizes any non-zero finite quaternion.
    pub fn new_normalize(q: Quat) -> Result<Self, MathError> {
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(MathError::InvalidInput(
                "cannot normalize a zero quaternion".into(),
            ));
        }
        Ok(UnitQuat(q.scale(1.0 / n)))
    }

    /// Rotation of `angle_rad` about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Result<Self, MathError> {
        if angle_rad == 0.0 {
            return Ok(UnitQuat::IDENTITY);
        }
        let axis = axis
            .normalized()
            .ok_or_else(|| MathError::InvalidInput("rotation axis has zero length".into()))?;
        let (s, c) = (angle_rad * 0.5).sin_cos();
        Ok(UnitQuat(Quat::new(c, axis.x * s, axis.y * s, axis.z * s)))
    }

    pub fn quat(self) -> Quat {
        self.0
    }

    pub fn w(self) -> f64 {
        self.0.w
    }

    pub fn inverse(self) -> UnitQuat {
        UnitQuat(self.0.conj())
    }

    pub fn dot(self, o: UnitQuat) -> f64 {
        self.0.dot(o.0)
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        // v + 2w(u × v) + 2u × (u × v)
        let u = self.0.vector();
        let t = u.cross(v).scale(2.0);
        v + t.scale(self.0.w) + u.cross(t)
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(self) -> f64 {
        2.0 * self.0.w.abs().min(1.0).acos()
    }

    /// Spherical linear interpolation along the shortest arc.
    pub fn slerp(self, other: UnitQuat, t: f64) -> UnitQuat {
        let mut b = other.0;
        let mut cos = self.0.dot(b);
        if cos < 0.0 {
            b = -b;
            cos = -cos;
        }
        if cos > 1.0 - 1e-12 {
            let q = self.0.scale(1.0 - t) + b.scale(t);
            return UnitQuat(q.scale(1.0 / q.norm()));
        }
        let theta = cos.min(1.0).acos();
        let sin = theta.sin();
        let wa = ((1.0 - t) * theta).sin() / sin;
        let wb = (t * theta).sin() / sin;
        let q = self.0.scale(wa) + b.scale(wb);
        UnitQuat(q.scale(1.0 / q.norm()))
    }

    /// The representative of this rotation with `w >= 0` (first non-zero
    /// component positive when `w == 0`).
    pub fn canonical(self) -> UnitQuat {
        let q = self.0;
        let first = [q.w, q.x, q.y, q.z]
            .into_iter()
            .find(|c| *c != 0.0)
            .unwrap_or(1.0);
        if first < 0.0 {
            UnitQuat(-q)
        } else {
            self
        }
    }
}

impl Mul for UnitQuat {
    type Output = UnitQuat;
    fn mul(self, o: UnitQuat) -> UnitQuat {
        let q = self.0 * o.0;
        UnitQuat(q.scale(1.0 / q.norm()))
    }
}

impl Neg for UnitQuat {
    type Output = UnitQuat;
    fn neg(self) -> UnitQuat {
        UnitQuat(-self.0)
    }
}

impl TryFrom<Quat> for UnitQuat {
    type Error = MathError;
    fn try_from(q: Quat) -> Result<Self, MathError> {
        UnitQuat::new(q)
    }
}

impl From<UnitQuat> for Quat {
    fn from(q: UnitQuat) -> Quat {
        q.0
    }
}

/// Angle between two rotations in degrees, in `[0, 180]`.
pub fn rot_angle_between(q1: UnitQuat, q2: UnitQuat) -> f64 {
    (2.0 * q1.dot(q2).abs().min(1.0).acos()).to_degrees()
}

/// Serialized as `{"p": [x, y, z], "q": [w, x, y, z]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub position: Vec3,
    pub rotation: UnitQuat,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    p: [f64; 3],
    q: [f64; 4],
}

impl TryFrom<PoseRepr> for Pose {
    type Error = MathError;
    fn try_from(r: PoseRepr) -> Result<Pose, MathError> {
        let position = Vec3::from(r.p);
        if !position.is_finite() {
            return Err(MathError::InvalidInput("pose position is not finite".into()));
        }
        let rotation = UnitQuat::new(Quat::new(r.q[0], r.q[1], r.q[2], r.q[3]))?;
        Ok(Pose { position, rotation })
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> PoseRepr {
        PoseRepr {
            p: p.position.to_array(),
            q: p.rotation.quat().to_array(),
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vec3::ZERO,
        rotation: UnitQuat::IDENTITY,
    };

    pub fn new(position: Vec3, rotation: UnitQuat) -> Self {
        Self { position, rotation }
    }

    pub fn from_position(position: Vec3) -> Self {
        Self::new(position, UnitQuat::IDENTITY)
    }

    /// `self ∘ child`: `child` expressed in this pose's frame.
    pub fn compose(&self, child: &Pose) -> Pose {
        Pose {
            position: self.position + self.rotation.rotate(child.position),
            rotation: self.rotation * child.rotation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose {
            position: -inv.rotate(self.position),
            rotation: inv,
        }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.position + self.rotation.rotate(p)
    }

    pub fn forward(&self) -> Vec3 {
        self.rotation.rotate(Vec3::Z)
    }
}

/// Unit dual quaternion `real + ε·dual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuat {
    pub real: UnitQuat,
    pub dual: Quat,
}

impl DualQuat {
    pub const IDENTITY: DualQuat = DualQuat {
        real: UnitQuat::IDENTITY,
        dual: Quat::ZERO,
    };

    /// Builds from raw parts, checking both unit conditions within
    /// [`UNIT_TOLERANCE`], then projects exactly onto the unit set.
    pub fn new(real: Quat, dual: Quat) -> Result<Self, MathError> {
        let n = real.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(MathError::InvalidInput(format!(
                "non-unit dual quaternion: real norm {n}"
            )));
        }
        let d = real.dot(dual) / n;
        if !d.is_finite() || d.abs() > UNIT_TOLERANCE {
            return Err(MathError::InvalidInput(format!(
                "non-unit dual quaternion: real·dual = {d}"
            )));
        }
        if (n - 1.0).abs() <= ROUNDING_TOLERANCE && d.abs() <= ROUNDING_TOLERANCE {
            return Ok(DualQuat {
                real: UnitQuat(real),
                dual,
            });
        }
        Ok(Self::project(real, dual))
    }

    /// Normalizes the real part and removes the component of `dual`
    /// parallel to `real`.
    fn project(real: Quat, dual: Quat) -> DualQuat {
        let n = real.norm();
        let r = real.scale(1.0 / n);
        let d = dual.scale(1.0 / n);
        let d = d - r.scale(r.dot(d));
        DualQuat {
            real: UnitQuat(r),
            dual: d,
        }
    }

    pub fn from_pose(p: &Pose) -> Result<DualQuat, MathError> {
        let r = p.rotation.quat();
        let n = r.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(MathError::InvalidInput(format!(
                "pose rotation norm {n} is not unit"
            )));
        }
        if !p.position.is_finite() {
            return Err(MathError::InvalidInput("pose position is not finite".into()));
        }
        Ok(Self::from_pose_unchecked(p))
    }

    pub(crate) fn from_pose_unchecked(p: &Pose) -> DualQuat {
        let r = p.rotation.quat();
        DualQuat {
            real: p.rotation,
            dual: (Quat::pure(p.position) * r).scale(0.5),
        }
    }

    pub fn to_pose(&self) -> Result<Pose, MathError> {
        self.check()?;
        Ok(self.to_pose_unchecked())
    }

    pub(crate) fn to_pose_unchecked(self) -> Pose {
        let t = (self.dual * self.real.quat().conj()).scale(2.0);
        Pose {
            position: t.vector(),
            rotation: self.real,
        }
    }

    fn check(&self) -> Result<(), MathError> {
        let n = self.real.quat().norm();
        let d = self.real.quat().dot(self.dual);
        if (n - 1.0).abs() > UNIT_TOLERANCE || d.abs() > UNIT_TOLERANCE || !d.is_finite() {
            return Err(MathError::InvalidInput(format!(
                "non-unit dual quaternion (norm {n}, real·dual {d})"
            )));
        }
        Ok(())
    }

    pub fn conj(&self) -> DualQuat {
        DualQuat {
            real: self.real.inverse(),
            dual: self.dual.conj(),
        }
    }

    /// Product `self · b`, i.e. `b` applied in `self`'s frame.
    pub fn mul(&self, b: &DualQuat) -> DualQuat {
        let ar = self.real.quat();
        let br = b.real.quat();
        let real = ar * br;
        let dual = ar * b.dual + self.dual * br;
        Self::project(real, dual)
    }

    pub fn neg(&self) -> DualQuat {
        DualQuat {
            real: -self.real,
            dual: -self.dual,
        }
    }

    /// Screw linear interpolation `a · (a⁻¹b)^t`, `t ∈ [0, 1]`.
    ///
    /// `b` is sign-flipped onto `a`'s hemisphere first, so `b` and `-b`
    /// produce the same path. `t = 0` returns `a` bit-exactly and `t = 1`
    /// returns the flipped `b`.
    pub fn sclerp(a: &DualQuat, b: &DualQuat, t: f64) -> Result<DualQuat, MathError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(MathError::InvalidInput(format!(
                "interpolation parameter {t} outside [0, 1]"
            )));
        }
        a.check()?;
        b.check()?;
        let b = if a.real.dot(b.real) < 0.0 { b.neg() } else { *b };
        if t == 0.0 {
            return Ok(*a);
        }
        if t == 1.0 {
            return Ok(b);
        }
        let diff = a.conj().mul(&b);
        Ok(a.mul(&diff.pow(t)))
    }

    /// Real power of a unit dual quaternion via its screw parameters.
    /// Assumes `real.w >= 0`.
    fn pow(&self, t: f64) -> DualQuat {
        let r = self.real.quat();
        let half = r.w.clamp(-1.0, 1.0).acos();
        let sin_half = half.sin();
        if 2.0 * half < SCREW_ANGLE_EPS || sin_half.abs() < 1e-12 {
            // Degenerate screw: scale the translation linearly, nlerp the tiny
            // residual rotation.
            let pose = self.to_pose_unchecked();
            let rot = UnitQuat::IDENTITY.slerp(pose.rotation, t);
            return DualQuat::from_pose_unchecked(&Pose::new(pose.position.scale(t), rot));
        }
        let axis = r.vector().scale(1.0 / sin_half);
        // Pitch distance along the axis and the moment vector.
        let d = -2.0 * self.dual.w / sin_half;
        let moment = (self.dual.vector() - axis.scale(0.5 * d * half.cos())).scale(1.0 / sin_half);

        let half_t = half * t;
        let d_t = d * t;
        let (s, c) = half_t.sin_cos();
        let real = Quat::new(c, axis.x * s, axis.y * s, axis.z * s);
        let dv = axis.scale(0.5 * d_t * c) + moment.scale(s);
        let dual = Quat::new(-0.5 * d_t * s, dv.x, dv.y, dv.z);
        Self::project(real, dual)
    }

    /// `[rw, rx, ry, rz, dw, dx, dy, dz]`.
    pub fn to_array(&self) -> [f64; 8] {
        let r = self.real.quat();
        let d = self.dual;
        [r.w, r.x, r.y, r.z, d.w, d.x, d.y, d.z]
    }

    pub fn from_array(a: [f64; 8]) -> Result<DualQuat, MathError> {
        DualQuat::new(
            Quat::new(a[0], a[1], a[2], a[3]),
            Quat::new(a[4], a[5], a[6], a[7]),
        )
    }
}

pub fn dq_from_pose(p: &Pose) -> Result<DualQuat, MathError> {
    DualQuat::from_pose(p)
}

pub fn dq_to_pose(q: &DualQuat) -> Result<Pose, MathError> {
    q.to_pose()
}

pub fn dq_mul(a: &DualQuat, b: &DualQuat) -> DualQuat {
    a.mul(b)
}

pub fn dq_sclerp(a: &DualQuat, b: &DualQuat, t: f64) -> Result<DualQuat, MathError> {
    DualQuat::sclerp(a, b, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps
    }

    fn rot_z(deg: f64) -> UnitQuat {
        UnitQuat::from_axis_angle(Vec3::Z, deg.to_radians()).unwrap()
    }

    #[test]
    fn identity_pose_maps_to_identity_dq() {
        let dq = dq_from_pose(&Pose::IDENTITY).unwrap();
        assert_eq!(dq.to_array(), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn translation_x2_gives_dual_i() {
        // ½·(0,2,0,0)·(1,0,0,0) = (0,1,0,0)
        let dq = dq_from_pose(&Pose::from_position(Vec3::new(2.0, 0.0, 0.0))).unwrap();
        assert_eq!(dq.dual, Quat::new(0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn dual_half_i_decodes_to_unit_x() {
        let dq = DualQuat::new(Quat::IDENTITY, Quat::new(0.0, 0.5, 0.0, 0.0)).unwrap();
        let p = dq_to_pose(&dq).unwrap();
        assert_eq!(p.position, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn negated_dq_decodes_to_same_pose() {
        let pose = Pose::new(Vec3::new(0.3, -1.0, 2.0), rot_z(40.0));
        let dq = dq_from_pose(&pose).unwrap();
        let p = dq_to_pose(&dq.neg()).unwrap();
        assert!(p.position.distance(pose.position) < 1e-12);
        assert!(rot_angle_between(p.rotation, pose.rotation) < 1e-9);
    }

    #[test]
    fn non_unit_rotation_is_rejected() {
        let bad = Pose {
            position: Vec3::ZERO,
            rotation: UnitQuat(Quat::new(0.5, 0.0, 0.0, 0.0)),
        };
        assert!(matches!(dq_from_pose(&bad), Err(MathError::InvalidInput(_))));
        let bad_dq = DualQuat {
            real: UnitQuat::IDENTITY,
            dual: Quat::new(0.1, 0.0, 0.0, 0.0),
        };
        assert!(dq_to_pose(&bad_dq).is_err());
    }

    #[test]
    fn translations_compose() {
        let a = dq_from_pose(&Pose::from_position(Vec3::X)).unwrap();
        let b = dq_from_pose(&Pose::from_position(Vec3::Y)).unwrap();
        let p = dq_mul(&a, &b).to_pose().unwrap();
        assert!(p.position.distance(Vec3::new(1.0, 1.0, 0.0)) < 1e-15);
        assert_eq!(dq_mul(&a, &DualQuat::IDENTITY), a);
    }

    #[test]
    fn sclerp_same_axis_screw_halves() {
        let a = DualQuat::IDENTITY;
        let b = dq_from_pose(&Pose::new(Vec3::new(0.0, 0.0, 1.0), rot_z(90.0))).unwrap();
        let mid = dq_sclerp(&a, &b, 0.5).unwrap().to_pose().unwrap();
        assert!(rot_angle_between(mid.rotation, rot_z(45.0)) < 1e-9);
        assert!(mid.position.distance(Vec3::new(0.0, 0.0, 0.5)) < 1e-12);
    }

    #[test]
    fn sclerp_pure_translation_is_lerp() {
        let a = DualQuat::IDENTITY;
        let b = dq_from_pose(&Pose::from_position(Vec3::new(2.0, 0.0, 0.0))).unwrap();
        let p = dq_sclerp(&a, &b, 0.25).unwrap().to_pose().unwrap();
        assert!(p.position.distance(Vec3::new(0.5, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn sclerp_endpoints() {
        let a = dq_from_pose(&Pose::new(Vec3::new(1.0, 2.0, 3.0), rot_z(10.0))).unwrap();
        let b = dq_from_pose(&Pose::new(Vec3::new(-1.0, 0.0, 0.5), rot_z(200.0))).unwrap();
        assert_eq!(dq_sclerp(&a, &b, 0.0).unwrap(), a);
        let end = dq_sclerp(&a, &b, 1.0).unwrap();
        assert!(end == b || end == b.neg());
        assert!(end.real.dot(a.real) >= 0.0);
    }

    #[test]
    fn sclerp_rejects_extrapolation() {
        let a = DualQuat::IDENTITY;
        assert!(dq_sclerp(&a, &a, 1.5).is_err());
        assert!(dq_sclerp(&a, &a, -0.01).is_err());
        assert!(dq_sclerp(&a, &a, f64::NAN).is_err());
    }

    #[test]
    fn angle_between_examples() {
        let q = rot_z(33.0);
        assert!(close(rot_angle_between(q, q), 0.0, 1e-6));
        assert!(close(rot_angle_between(UnitQuat::IDENTITY, rot_z(90.0)), 90.0, 1e-9));
        assert!(close(rot_angle_between(q, -q), 0.0, 1e-6));
    }

    #[test]
    fn pose_inverse_composes_to_identity() {
        let p = Pose::new(Vec3::new(1.0, -2.0, 0.5), rot_z(70.0));
        let id = p.compose(&p.inverse());
        assert!(id.position.length() < 1e-12);
        assert!(rot_angle_between(id.rotation, UnitQuat::IDENTITY) < 1e-6);
    }
}
