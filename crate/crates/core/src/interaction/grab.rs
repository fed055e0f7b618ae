use thiserror::Error;

use crate::math::{Pose, Vec3};
use crate::scene::{GrabMode, HandRef, ObjectId, SceneState, Tag};

/// Velocity servo gain, 1/s.
pub const DEFAULT_GAIN: f64 = 20.0;
/// Velocity clamp, m/s.
pub const DEFAULT_V_MAX: f64 = 10.0;
/// Ticks a released object keeps moving (linearly damped) before freezing.
pub const THROW_TICKS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrabError {
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("object '{0}' is not interactable")]
    NotInteractable(String),
    #[error("object '{object}' is already held")]
    AlreadyHeld { object: String, by: HandRef },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrabBinding {
    pub object: ObjectId,
    pub hand: HandRef,
    pub mode: GrabMode,
    /// Object pose in the hand frame at grab time.
    pub offset: Pose,
    pub gain: f64,
    pub v_max: f64,
    /// Linear velocity applied on the last step, m/s.
    pub velocity: Vec3,
}

impl GrabBinding {
    pub fn target(&self, hand_pose: &Pose) -> Pose {
        hand_pose.compose(&self.offset)
    }
}

/// Binds `object_id` to `hand`. The scene is updated only on success.
pub fn grab_attach(
    scene: &mut SceneState,
    hand: HandRef,
    object_id: &str,
    mode: GrabMode,
) -> Result<GrabBinding, GrabError> {
    let hand_pose = scene.hand_pose(hand).unwrap_or(Pose::IDENTITY);
    let obj = scene
        .get_mut(object_id)
        .ok_or_else(|| GrabError::UnknownObject(object_id.to_string()))?;
    if !obj.has(Tag::Interactable) {
        return Err(GrabError::NotInteractable(object_id.to_string()));
    }
    if let Some(by) = obj.held_by {
        return Err(GrabError::AlreadyHeld {
            object: object_id.to_string(),
            by,
        });
    }
    let offset = hand_pose.inverse().compose(&obj.pose);
    obj.held_by = Some(hand);
    if mode == GrabMode::Parenting {
        // The rigid attachment is the composed pose from the first tick on.
        obj.pose = hand_pose.compose(&offset);
    }
    Ok(GrabBinding {
        object: object_id.to_string(),
        hand,
        mode,
        offset,
        gain: DEFAULT_GAIN,
        v_max: DEFAULT_V_MAX,
        velocity: Vec3::ZERO,
    })
}

/// Released object coasting on its last-tick velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct ThrowState {
    pub object: ObjectId,
    pub velocity: Vec3,
    pub ticks_left: u32,
}

/// Removes the binding held by `hand`, clears `held_by` and returns the
/// throw it starts (if the object was moving).
pub fn grab_release(
    scene: &mut SceneState,
    bindings: &mut Vec<GrabBinding>,
    hand: HandRef,
) -> Option<(GrabBinding, Option<ThrowState>)> {
    let i = bindings.iter().position(|b| b.hand == hand)?;
    let binding = bindings.remove(i);
    if let Some(obj) = scene.get_mut(&binding.object) {
        obj.held_by = None;
    }
    let throw = (binding.velocity != Vec3::ZERO).then(|| ThrowState {
        object: binding.object.clone(),
        velocity: binding.velocity,
        ticks_left: THROW_TICKS,
    });
    Some((binding, throw))
}

/// Advances every binding by `dt` seconds.
pub fn grab_step(scene: &mut SceneState, bindings: &mut [GrabBinding], dt: f64) {
    for b in bindings.iter_mut() {
        let hand_pose = scene.hand_pose(b.hand).unwrap_or(Pose::IDENTITY);
        let target = b.target(&hand_pose);
        let Some(obj) = scene.get_mut(&b.object) else {
            continue;
        };
        match b.mode {
            GrabMode::Parenting => {
                b.velocity = (target.position - obj.pose.position).scale(1.0 / dt);
                obj.pose = target;
            }
            GrabMode::Velocity => {
                let mut v = (target.position - obj.pose.position).scale(b.gain);
                let speed = v.length();
                if speed > b.v_max {
                    v = v.scale(b.v_max / speed);
                }
                obj.pose.position += v.scale(dt);
                b.velocity = v;
                if obj.pose.rotation != target.rotation {
                    let frac = (b.gain * dt).min(1.0);
                    obj.pose.rotation = obj.pose.rotation.slerp(target.rotation, frac);
                }
            }
        }
    }
}

/// Advances coasting objects one tick. Velocity decays linearly to zero over
/// [`THROW_TICKS`]; finished throws are dropped.
pub fn throw_step(scene: &mut SceneState, throws: &mut Vec<ThrowState>, dt: f64) {
    throws.retain_mut(|t| {
        let Some(obj) = scene.get_mut(&t.object) else {
            return false;
        };
        if obj.held_by.is_some() {
            return false;
        }
        let factor = f64::from(t.ticks_left) / f64::from(THROW_TICKS);
        obj.pose.position += t.velocity.scale(factor * dt);
        t.ticks_left -= 1;
        t.ticks_left > 0
    });
}
