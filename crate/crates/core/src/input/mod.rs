//! Modular device controller: AR and VR device profiles whose raw events map
//! onto one canonical event vocabulary.
//!
//! The AR virtual hand sits [`AR_HAND_DEPTH`] meters along the gaze ray, so
//! the head pose is always recoverable from the virtual hand pose stored in
//! the scene.

pub mod script;
pub use script::{Scripter, SCRIPT_VR_HAND};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Pose, Vec3};
use crate::scene::{ClientId, Hand, HandRef, ObjectId, SceneObject, SceneState, Tag};

/// Default HoloLens-class field of view, degrees.
pub const AR_DEFAULT_FOV_DEG: f64 = 35.0;
/// Depth of the AR virtual hand along the gaze ray, meters.
pub const AR_HAND_DEPTH: f64 = 0.6;
/// VR grab reach around the controller, meters.
pub const VR_GRAB_RADIUS: f64 = 0.15;
/// Degrees within which two gaze candidates count as equally aligned.
const ANGLE_TIE_DEG: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeviceKind {
    AR,
    VR,
}

impl DeviceKind {
    pub fn parse(s: &str) -> Option<DeviceKind> {
        match s {
            "AR" | "ar" => Some(DeviceKind::AR),
            "VR" | "vr" => Some(DeviceKind::VR),
            _ => None,
        }
    }

    pub fn profile(self) -> DeviceProfile {
        match self {
            DeviceKind::AR => DeviceProfile::ar(),
            DeviceKind::VR => DeviceProfile::vr(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    GestureTap,
    GesturePinch,
    Voice,
    ControllerGrip,
    ControllerTrigger,
}

impl Capability {
    fn is_controller(self) -> bool {
        matches!(self, Capability::ControllerGrip | Capability::ControllerTrigger)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub kind: DeviceKind,
    pub fov_deg: f64,
    pub capabilities: BTreeSet<Capability>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("invalid device profile: {0}")]
    InvalidProfile(String),
    #[error("client {client}: {event} is outside the {kind:?} profile capabilities")]
    Capability {
        client: ClientId,
        kind: DeviceKind,
        event: &'static str,
    },
}

impl DeviceProfile {
    pub fn new(
        kind: DeviceKind,
        fov_deg: f64,
        capabilities: impl IntoIterator<Item = Capability>,
    ) -> Result<Self, InputError> {
        let capabilities: BTreeSet<Capability> = capabilities.into_iter().collect();
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(InputError::InvalidProfile(format!(
                "field of view {fov_deg} outside (0, 180)"
            )));
        }
        let bad = match kind {
            DeviceKind::AR => capabilities.iter().find(|c| c.is_controller()),
            DeviceKind::VR => capabilities.iter().find(|c| !c.is_controller()),
        };
        if let Some(c) = bad {
            return Err(InputError::InvalidProfile(format!(
                "{kind:?} profile cannot have capability {c:?}"
            )));
        }
        Ok(Self {
            kind,
            fov_deg,
            capabilities,
        })
    }

    pub fn ar() -> Self {
        Self::new(
            DeviceKind::AR,
            AR_DEFAULT_FOV_DEG,
            [Capability::GestureTap, Capability::GesturePinch, Capability::Voice],
        )
        .expect("static profile")
    }

    pub fn vr() -> Self {
        Self::new(
            DeviceKind::VR,
            110.0,
            [Capability::ControllerGrip, Capability::ControllerTrigger],
        )
        .expect("static profile")
    }

    pub fn has(&self, c: Capability) -> bool {
        self.capabilities.contains(&c)
    }
}

/// Device-specific input as delivered by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawKind {
    ArTapDown,
    ArTapUp,
    ArPinchStart,
    ArPinchEnd,
    ArHeadPose { pose: Pose },
    ArVoice { word: String },
    VrGripDown { hand: Hand },
    VrGripUp { hand: Hand },
    VrTriggerDown { hand: Hand },
    VrTriggerUp { hand: Hand },
    VrHandPose { hand: Hand, pose: Pose },
}

impl RawKind {
    pub fn name(&self) -> &'static str {
        match self {
            RawKind::ArTapDown => "ar_tap_down",
            RawKind::ArTapUp => "ar_tap_up",
            RawKind::ArPinchStart => "ar_pinch_start",
            RawKind::ArPinchEnd => "ar_pinch_end",
            RawKind::ArHeadPose { .. } => "ar_head_pose",
            RawKind::ArVoice { .. } => "ar_voice",
            RawKind::VrGripDown { .. } => "vr_grip_down",
            RawKind::VrGripUp { .. } => "vr_grip_up",
            RawKind::VrTriggerDown { .. } => "vr_trigger_down",
            RawKind::VrTriggerUp { .. } => "vr_trigger_up",
            RawKind::VrHandPose { .. } => "vr_hand_pose",
        }
    }

    /// Device kind and capability (if any) required to emit this event.
    fn requirement(&self) -> (DeviceKind, Option<Capability>) {
        use Capability::*;
        match self {
            RawKind::ArTapDown | RawKind::ArTapUp => (DeviceKind::AR, Some(GestureTap)),
            RawKind::ArPinchStart | RawKind::ArPinchEnd => (DeviceKind::AR, Some(GesturePinch)),
            RawKind::ArHeadPose { .. } => (DeviceKind::AR, None),
            RawKind::ArVoice { .. } => (DeviceKind::AR, Some(Voice)),
            RawKind::VrGripDown { .. } | RawKind::VrGripUp { .. } => {
                (DeviceKind::VR, Some(ControllerGrip))
            }
            RawKind::VrTriggerDown { .. } | RawKind::VrTriggerUp { .. } => {
                (DeviceKind::VR, Some(ControllerTrigger))
            }
            RawKind::VrHandPose { .. } => (DeviceKind::VR, None),
        }
    }

    fn vr_hand(&self) -> Option<Hand> {
        match self {
            RawKind::VrGripDown { hand }
            | RawKind::VrGripUp { hand }
            | RawKind::VrTriggerDown { hand }
            | RawKind::VrTriggerUp { hand }
            | RawKind::VrHandPose { hand, .. } => Some(*hand),
            _ => None,
        }
    }
}

/// One line of an event log: `{"tick":N,"client":id,"raw":{...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub tick: u64,
    pub client: ClientId,
    pub raw: RawKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanonicalKind {
    GrabStart { object: ObjectId, hand: Hand },
    Release { hand: Hand },
    Activate { object: ObjectId },
    ToolActivate { hand: Hand },
    QuizSelect { choice: usize },
    HandMoved { hand: Hand, pose: Pose },
    VoiceCommand { word: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalEvent {
    pub tick: u64,
    pub client: ClientId,
    pub kind: CanonicalKind,
}

/// Head pose implied by an AR virtual-hand pose.
pub fn head_from_virtual_hand(hand: &Pose) -> Pose {
    hand.compose(&Pose::from_position(Vec3::new(0.0, 0.0, -AR_HAND_DEPTH)))
}

/// Virtual-hand pose for an AR head pose.
pub fn virtual_hand_from_head(head: &Pose) -> Pose {
    head.compose(&Pose::from_position(Vec3::new(0.0, 0.0, AR_HAND_DEPTH)))
}

/// Angle in degrees between the head's forward axis and the direction to `p`.
fn off_axis_deg(head: &Pose, p: Vec3) -> Option<f64> {
    let dir = (p - head.position).normalized()?;
    Some(head.forward().dot(dir).clamp(-1.0, 1.0).acos().to_degrees())
}

fn gaze_pick_where<'a>(
    scene: &'a SceneState,
    head: &Pose,
    fov_deg: f64,
    mut accept: impl FnMut(&SceneObject) -> bool,
) -> Option<&'a SceneObject> {
    let half = fov_deg / 2.0;
    let mut best: Option<(f64, f64, &SceneObject)> = None;
    // Objects iterate in id order, so the first of equal candidates has the
    // lexicographically smaller id.
    for obj in scene.objects.values() {
        if !accept(obj) {
            continue;
        }
        let Some(angle) = off_axis_deg(head, obj.position()) else {
            continue;
        };
        if angle > half {
            continue;
        }
        let dist = head.position.distance(obj.position());
        let better = match best {
            None => true,
            Some((ba, bd, _)) => {
                if (angle - ba).abs() <= ANGLE_TIE_DEG {
                    dist < bd
                } else {
                    angle < ba
                }
            }
        };
        if better {
            best = Some((angle, dist, obj));
        }
    }
    best.map(|(_, _, o)| o)
}

/// The interactable object nearest the gaze axis within half the field of
/// view. Ties go to the nearer object, then the smaller id.
pub fn gaze_pick(scene: &SceneState, head: &Pose, fov_deg: f64) -> Option<ObjectId> {
    gaze_pick_where(scene, head, fov_deg, |o| o.has(Tag::Interactable)).map(|o| o.id.clone())
}

fn nearest_within(
    scene: &SceneState,
    p: Vec3,
    radius: f64,
    mut accept: impl FnMut(&SceneObject) -> bool,
) -> Option<&SceneObject> {
    let mut best: Option<(f64, &SceneObject)> = None;
    for obj in scene.objects.values().filter(|o| accept(o)) {
        let d = obj.position().distance(p);
        if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, obj));
        }
    }
    best.map(|(_, o)| o)
}

/// Maps one raw event to canonical events.
///
/// `quiz_icons` lists, per choice index of the active quiz, the scene object
/// that represents the choice (empty when no quiz is active).
pub fn map_raw_input(
    profile: &DeviceProfile,
    raw: &RawEvent,
    scene: &SceneState,
    quiz_icons: &[Option<ObjectId>],
) -> Result<Vec<CanonicalEvent>, InputError> {
    let (kind, cap) = raw.raw.requirement();
    let allowed = kind == profile.kind && cap.is_none_or(|c| profile.has(c));
    let hand_ok = raw.raw.vr_hand().is_none_or(|h| h != Hand::Virtual);
    if !allowed || !hand_ok {
        return Err(InputError::Capability {
            client: raw.client,
            kind: profile.kind,
            event: raw.raw.name(),
        });
    }

    let ev = |kind: CanonicalKind| CanonicalEvent {
        tick: raw.tick,
        client: raw.client,
        kind,
    };
    let quiz_index = |obj: &SceneObject| {
        quiz_icons
            .iter()
            .position(|icon| icon.as_deref() == Some(obj.id.as_str()))
    };
    let holding = |hand: Hand| scene.held_object(HandRef::new(raw.client, hand));

    let virtual_ref = HandRef::new(raw.client, Hand::Virtual);
    let head = scene
        .hand_pose(virtual_ref)
        .map(|h| head_from_virtual_hand(&h));

    let out = match &raw.raw {
        RawKind::ArHeadPose { pose } => vec![ev(CanonicalKind::HandMoved {
            hand: Hand::Virtual,
            pose: virtual_hand_from_head(pose),
        })],
        RawKind::ArPinchStart => {
            if holding(Hand::Virtual).is_some() {
                vec![]
            } else {
                head.and_then(|h| gaze_pick(scene, &h, profile.fov_deg))
                    .map(|object| {
                        ev(CanonicalKind::GrabStart {
                            object,
                            hand: Hand::Virtual,
                        })
                    })
                    .into_iter()
                    .collect()
            }
        }
        RawKind::ArPinchEnd => match holding(Hand::Virtual) {
            Some(_) => vec![ev(CanonicalKind::Release {
                hand: Hand::Virtual,
            })],
            None => vec![],
        },
        RawKind::ArTapDown => vec![],
        RawKind::ArTapUp => {
            let target = head.and_then(|h| {
                gaze_pick_where(scene, &h, profile.fov_deg, |o| {
                    o.has(Tag::Interactable) || quiz_index(o).is_some()
                })
            });
            match target {
                Some(obj) => match quiz_index(obj) {
                    Some(choice) => vec![ev(CanonicalKind::QuizSelect { choice })],
                    None => vec![ev(CanonicalKind::Activate {
                        object: obj.id.clone(),
                    })],
                },
                None => vec![],
            }
        }
        RawKind::ArVoice { word } => match word.as_str() {
            "use" => match holding(Hand::Virtual) {
                Some(_) => vec![ev(CanonicalKind::ToolActivate {
                    hand: Hand::Virtual,
                })],
                None => vec![],
            },
            other => vec![ev(CanonicalKind::VoiceCommand {
                word: other.to_string(),
            })],
        },
        RawKind::VrHandPose { hand, pose } => vec![ev(CanonicalKind::HandMoved {
            hand: *hand,
            pose: *pose,
        })],
        RawKind::VrGripDown { hand } => {
            let hand_pose = scene.hand_pose(HandRef::new(raw.client, *hand));
            match (holding(*hand), hand_pose) {
                (None, Some(hp)) => {
                    nearest_within(scene, hp.position, VR_GRAB_RADIUS, |o| {
                        o.has(Tag::Interactable)
                    })
                    .map(|o| {
                        ev(CanonicalKind::GrabStart {
                            object: o.id.clone(),
                            hand: *hand,
                        })
                    })
                    .into_iter()
                    .collect()
                }
                _ => vec![],
            }
        }
        RawKind::VrGripUp { hand } => match holding(*hand) {
            Some(_) => vec![ev(CanonicalKind::Release { hand: *hand })],
            None => vec![],
        },
        RawKind::VrTriggerDown { hand } => {
            if let Some(held) = holding(*hand) {
                if held.has(Tag::Tool) {
                    vec![ev(CanonicalKind::ToolActivate { hand: *hand })]
                } else {
                    vec![]
                }
            } else {
                let hp = scene.hand_pose(HandRef::new(raw.client, *hand));
                let touched = hp.and_then(|hp| {
                    nearest_within(scene, hp.position, VR_GRAB_RADIUS, |o| {
                        o.has(Tag::Interactable) || quiz_index(o).is_some()
                    })
                });
                match touched {
                    Some(obj) => match quiz_index(obj) {
                        Some(choice) => vec![ev(CanonicalKind::QuizSelect { choice })],
                        None => vec![ev(CanonicalKind::Activate {
                            object: obj.id.clone(),
                        })],
                    },
                    None => vec![],
                }
            }
        }
        RawKind::VrTriggerUp { .. } => vec![],
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::UnitQuat;

    fn obj(id: &str, p: Vec3, tags: &[Tag]) -> SceneObject {
        SceneObject::new(id, Pose::from_position(p), tags.iter().copied())
    }

    fn raw(kind: RawKind) -> RawEvent {
        RawEvent {
            tick: 5,
            client: 1,
            raw: kind,
        }
    }

    fn kinds(evs: Vec<CanonicalEvent>) -> Vec<CanonicalKind> {
        evs.into_iter().map(|e| e.kind).collect()
    }

    #[test]
    fn profile_invariants() {
        assert!(DeviceProfile::new(DeviceKind::AR, 35.0, [Capability::ControllerGrip]).is_err());
        assert!(DeviceProfile::new(DeviceKind::VR, 90.0, [Capability::Voice]).is_err());
        assert!(DeviceProfile::new(DeviceKind::AR, 0.0, []).is_err());
        assert_eq!(DeviceProfile::ar().fov_deg, 35.0);
    }

    #[test]
    fn gaze_dead_ahead() {
        let mut s = SceneState::new();
        s.insert(obj("Vase", Vec3::new(0.0, 0.0, 2.0), &[Tag::Interactable]));
        assert_eq!(gaze_pick(&s, &Pose::IDENTITY, 35.0), Some("Vase".into()));
    }

    #[test]
    fn gaze_outside_half_angle() {
        let mut s = SceneState::new();
        let a = 30f64.to_radians();
        s.insert(obj("Vase", Vec3::new(a.sin(), 0.0, a.cos()).scale(2.0), &[Tag::Interactable]));
        assert_eq!(gaze_pick(&s, &Pose::IDENTITY, 35.0), None);
    }

    #[test]
    fn gaze_tie_prefers_nearer() {
        let mut s = SceneState::new();
        let a = 5f64.to_radians();
        let dir_l = Vec3::new(-a.sin(), 0.0, a.cos());
        let dir_r = Vec3::new(a.sin(), 0.0, a.cos());
        s.insert(obj("A_far", dir_l.scale(2.0), &[Tag::Interactable]));
        s.insert(obj("B_near", dir_r.scale(1.0), &[Tag::Interactable]));
        assert_eq!(gaze_pick(&s, &Pose::IDENTITY, 35.0), Some("B_near".into()));
    }

    #[test]
    fn gaze_ignores_non_interactable() {
        let mut s = SceneState::new();
        s.insert(obj("Wall", Vec3::new(0.0, 0.0, 2.0), &[]));
        assert_eq!(gaze_pick(&s, &Pose::IDENTITY, 35.0), None);
    }

    fn ar_scene() -> SceneState {
        let mut s = SceneState::new();
        s.insert(obj("FlagA", Vec3::new(-0.5, 1.5, 1.0), &[]));
        s.insert(obj("FlagB", Vec3::new(0.0, 1.5, 1.0), &[]));
        s.insert(obj(
            "Scissors",
            Vec3::new(0.0, 1.0, 0.6),
            &[Tag::Interactable, Tag::Tool],
        ));
        s
    }

    fn look_at(s: &mut SceneState, p: Vec3) {
        // Identity head rotation looks along +Z.
        let head = Pose::from_position(p - Vec3::new(0.0, 0.0, 1.0));
        s.hands
            .insert(HandRef::new(1, Hand::Virtual), virtual_hand_from_head(&head));
    }

    #[test]
    fn ar_tap_on_quiz_flag_selects_choice() {
        let mut s = ar_scene();
        look_at(&mut s, Vec3::new(0.0, 1.5, 1.0));
        let icons = vec![Some("FlagA".to_string()), Some("FlagB".to_string())];
        let out = map_raw_input(&DeviceProfile::ar(), &raw(RawKind::ArTapUp), &s, &icons).unwrap();
        assert_eq!(kinds(out), vec![CanonicalKind::QuizSelect { choice: 1 }]);
    }

    #[test]
    fn ar_voice_use_while_holding_tool() {
        let mut s = ar_scene();
        s.get_mut("Scissors").unwrap().held_by = Some(HandRef::new(1, Hand::Virtual));
        let use_word = RawKind::ArVoice { word: "use".into() };
        let out = map_raw_input(&DeviceProfile::ar(), &raw(use_word.clone()), &s, &[]).unwrap();
        assert_eq!(
            kinds(out),
            vec![CanonicalKind::ToolActivate {
                hand: Hand::Virtual
            }]
        );
        s.get_mut("Scissors").unwrap().held_by = None;
        assert!(map_raw_input(&DeviceProfile::ar(), &raw(use_word), &s, &[])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn ar_pinch_grabs_gazed_object_once() {
        let mut s = ar_scene();
        look_at(&mut s, Vec3::new(0.0, 1.0, 0.6));
        let out = map_raw_input(&DeviceProfile::ar(), &raw(RawKind::ArPinchStart), &s, &[]).unwrap();
        assert_eq!(
            kinds(out),
            vec![CanonicalKind::GrabStart {
                object: "Scissors".into(),
                hand: Hand::Virtual
            }]
        );
        s.get_mut("Scissors").unwrap().held_by = Some(HandRef::new(1, Hand::Virtual));
        let again = map_raw_input(&DeviceProfile::ar(), &raw(RawKind::ArPinchStart), &s, &[]).unwrap();
        assert!(again.is_empty());
    }

    #[test]
    fn vr_grip_with_nothing_in_reach() {
        let mut s = ar_scene();
        s.hands.insert(
            HandRef::new(1, Hand::Right),
            Pose::from_position(Vec3::new(3.0, 0.0, 0.0)),
        );
        let out = map_raw_input(
            &DeviceProfile::vr(),
            &raw(RawKind::VrGripDown { hand: Hand::Right }),
            &s,
            &[],
        )
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn vr_release_only_when_holding() {
        let mut s = ar_scene();
        let up = raw(RawKind::VrGripUp { hand: Hand::Left });
        assert!(map_raw_input(&DeviceProfile::vr(), &up, &s, &[]).unwrap().is_empty());
        s.get_mut("Scissors").unwrap().held_by = Some(HandRef::new(1, Hand::Left));
        assert_eq!(
            kinds(map_raw_input(&DeviceProfile::vr(), &up, &s, &[]).unwrap()),
            vec![CanonicalKind::Release { hand: Hand::Left }]
        );
    }

    #[test]
    fn events_outside_capabilities_are_protocol_errors() {
        let s = ar_scene();
        let grip = raw(RawKind::VrGripDown { hand: Hand::Right });
        assert!(matches!(
            map_raw_input(&DeviceProfile::ar(), &grip, &s, &[]),
            Err(InputError::Capability { .. })
        ));
        assert!(map_raw_input(&DeviceProfile::vr(), &raw(RawKind::ArTapUp), &s, &[]).is_err());
        let limited = DeviceProfile::new(DeviceKind::AR, 35.0, [Capability::GestureTap]).unwrap();
        assert!(map_raw_input(&limited, &raw(RawKind::ArVoice { word: "use".into() }), &s, &[]).is_err());
        let virt = raw(RawKind::VrGripDown { hand: Hand::Virtual });
        assert!(map_raw_input(&DeviceProfile::vr(), &virt, &s, &[]).is_err());
    }

    #[test]
    fn head_pose_maps_to_virtual_hand() {
        let s = SceneState::new();
        let head = Pose::new(
            Vec3::new(0.0, 1.6, 0.0),
            UnitQuat::from_axis_angle(Vec3::Y, 90f64.to_radians()).unwrap(),
        );
        let out = map_raw_input(&DeviceProfile::ar(), &raw(RawKind::ArHeadPose { pose: head }), &s, &[]).unwrap();
        let CanonicalKind::HandMoved { hand, pose } = &out[0].kind else {
            panic!()
        };
        assert_eq!(*hand, Hand::Virtual);
        // +Z rotated 90° about +Y points along +X.
        assert!(pose.position.distance(Vec3::new(0.6, 1.6, 0.0)) < 1e-12);
        assert!(head_from_virtual_hand(pose).position.distance(head.position) < 1e-12);
    }

    #[test]
    fn raw_event_json_shape() {
        let e = RawEvent {
            tick: 3,
            client: 2,
            raw: RawKind::VrGripDown { hand: Hand::Left },
        };
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"tick":3,"client":2,"raw":{"kind":"vr_grip_down","hand":"left"}}"#);
        assert_eq!(serde_json::from_str::<RawEvent>(&s).unwrap(), e);
    }
}
