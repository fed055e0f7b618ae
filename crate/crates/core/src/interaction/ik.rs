//! Analytic two-bone IK (law of cosines).
//!
//! Joint convention: the chain bends inside a vertical plane (one that
//! contains world up, `+Y`). `shoulder_azimuth_deg` orients that plane about
//! `+Y`, measured from `+X` toward `+Z`; `shoulder_elevation_deg` is the first
//! link's angle above the horizontal inside the plane; `elbow_flexion_deg` is
//! how far the second link turns downward from the first (0 = straight).

use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointAngles {
    pub shoulder_azimuth_deg: f64,
    pub shoulder_elevation_deg: f64,
    pub elbow_flexion_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkChain {
    pub base: Vec3,
    pub l1: f64,
    pub l2: f64,
    pub angles: JointAngles,
}

impl IkChain {
    pub fn new(base: Vec3, l1: f64, l2: f64) -> Self {
        Self {
            base,
            l1,
            l2,
            angles: JointAngles::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub angles: JointAngles,
    pub elbow: Vec3,
    pub end_effector: Vec3,
}

fn plane_dir(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    let (se, ce) = elevation_deg.to_radians().sin_cos();
    Vec3::new(ce * ca, se, ce * sa)
}

/// Elbow and end-effector positions for the given joint angles.
pub fn forward_kinematics(base: Vec3, l1: f64, l2: f64, angles: &JointAngles) -> (Vec3, Vec3) {
    let az = angles.shoulder_azimuth_deg;
    let el = angles.shoulder_elevation_deg;
    let elbow = base + plane_dir(az, el).scale(l1);
    let end = elbow + plane_dir(az, el - angles.elbow_flexion_deg).scale(l2);
    (elbow, end)
}

/// Solves for `target`. Distances outside `[|L1-L2|, L1+L2]` are clamped
/// along the target direction. When the target lies on the vertical through
/// the base, the chain keeps its current azimuth.
pub fn solve_two_bone_ik(chain: &IkChain, target: Vec3) -> IkSolution {
    let (l1, l2) = (chain.l1, chain.l2);
    let to_target = target - chain.base;
    let raw = to_target.length();
    let dir = to_target
        .normalized()
        .unwrap_or_else(|| plane_dir(chain.angles.shoulder_azimuth_deg, 0.0));
    let d = raw.clamp((l1 - l2).abs(), l1 + l2);

    let horizontal = dir.x.hypot(dir.z);
    let azimuth = if horizontal > 1e-12 {
        dir.z.atan2(dir.x).to_degrees()
    } else {
        chain.angles.shoulder_azimuth_deg
    };
    let target_elevation = dir.y.atan2(horizontal).to_degrees();

    let cos_elbow = ((l1 * l1 + l2 * l2 - d * d) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let elbow_flexion = 180.0 - cos_elbow.acos().to_degrees();
    let shoulder_offset = if d > 1e-12 {
        let cos_shoulder = ((l1 * l1 + d * d - l2 * l2) / (2.0 * l1 * d)).clamp(-1.0, 1.0);
        cos_shoulder.acos().to_degrees()
    } else {
        0.0
    };

    let angles = JointAngles {
        shoulder_azimuth_deg: azimuth,
        shoulder_elevation_deg: target_elevation + shoulder_offset,
        elbow_flexion_deg: elbow_flexion,
    };
    let (elbow, end_effector) = forward_kinematics(chain.base, l1, l2, &angles);
    IkSolution {
        angles,
        elbow,
        end_effector,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_chain() -> IkChain {
        IkChain::new(Vec3::ZERO, 1.0, 1.0)
    }

    #[test]
    fn full_extension() {
        let s = solve_two_bone_ik(&unit_chain(), Vec3::new(2.0, 0.0, 0.0));
        assert!(s.angles.elbow_flexion_deg.abs() < 1e-6);
        assert!(s.end_effector.distance(Vec3::new(2.0, 0.0, 0.0)) < 1e-9);
    }

    #[test]
    fn right_angle_elbow() {
        // cos(interior) = (1 + 1 - 2) / 2 = 0
        let s = solve_two_bone_ik(&unit_chain(), Vec3::new(1.0, 1.0, 0.0));
        assert!((s.angles.elbow_flexion_deg - 90.0).abs() < 1e-6);
        assert!(s.end_effector.distance(Vec3::new(1.0, 1.0, 0.0)) < 1e-9);
        // Elbow bends toward world up.
        assert!(s.elbow.y >= 1.0 - 1e-9);
    }

    #[test]
    fn unreachable_clamps_along_direction() {
        let target = Vec3::new(3.0, 4.0, 0.0);
        let s = solve_two_bone_ik(&unit_chain(), target);
        assert!((s.end_effector.length() - 2.0).abs() < 1e-9);
        let dir = target.normalized().unwrap();
        assert!(s.end_effector.normalized().unwrap().distance(dir) < 1e-9);
    }

    #[test]
    fn too_close_clamps_to_inner_radius() {
        let chain = IkChain::new(Vec3::new(0.0, 1.0, 0.0), 1.0, 0.4);
        let s = solve_two_bone_ik(&chain, Vec3::new(0.1, 1.0, 0.0));
        assert!((s.end_effector.distance(chain.base) - 0.6).abs() < 1e-9);
        assert!((s.angles.elbow_flexion_deg - 180.0).abs() < 1e-6);
    }

    #[test]
    fn vertical_target_keeps_azimuth() {
        let mut chain = unit_chain();
        chain.angles.shoulder_azimuth_deg = 30.0;
        let s = solve_two_bone_ik(&chain, Vec3::new(0.0, 1.5, 0.0));
        assert_eq!(s.angles.shoulder_azimuth_deg, 30.0);
        assert!(s.end_effector.distance(Vec3::new(0.0, 1.5, 0.0)) < 1e-9);
    }
}
