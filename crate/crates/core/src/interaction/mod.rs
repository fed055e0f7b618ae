//! Grab mechanics, hologram insertion checks, sweep accumulation and the
//! two-bone IK solver.

mod grab;
mod ik;

pub use grab::{
    grab_attach, grab_release, grab_step, throw_step, GrabBinding, GrabError, ThrowState,
    DEFAULT_GAIN, DEFAULT_V_MAX, THROW_TICKS,
};
pub use ik::{forward_kinematics, solve_two_bone_ik, IkChain, IkSolution, JointAngles};

use crate::math::{rot_angle_between, Pose, Vec3};
use crate::scene::Region;

/// Tolerances for matching an object against its hologram target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertTolerance {
    /// Meters.
    pub eps_pos: f64,
    /// Degrees.
    pub eps_rot: f64,
}

impl Default for InsertTolerance {
    fn default() -> Self {
        Self {
            eps_pos: 0.05,
            eps_rot: 15.0,
        }
    }
}

pub fn check_insert(object: &Pose, target: &Pose, tol: &InsertTolerance) -> bool {
    object.position.distance(target.position) <= tol.eps_pos
        && rot_angle_between(object.rotation, target.rotation) <= tol.eps_rot
}

/// Adds the stroke length `|cur - prev|` when both endpoints are inside
/// `region`.
pub fn sweep_accumulate(progress: f64, prev: Vec3, cur: Vec3, region: &Region) -> f64 {
    if region.contains(prev) && region.contains(cur) {
        progress + prev.distance(cur)
    } else {
        progress
    }
}
