//! Builds raw event logs from device-independent steps so that one scripted
//! playthrough can be emitted for either device family.
//!
//! The hand pose is the shared currency: an AR script moves the head so that
//! the virtual hand lands on it, a VR script moves the right controller there.

use crate::math::Pose;
use crate::scene::{ClientId, Hand};

use super::{head_from_virtual_hand, DeviceKind, RawEvent, RawKind};

/// Controller used by VR scripts.
pub const SCRIPT_VR_HAND: Hand = Hand::Right;

#[derive(Debug, Clone)]
pub struct Scripter {
    kind: DeviceKind,
    client: ClientId,
    tick: u64,
    hand: Pose,
    events: Vec<RawEvent>,
}

impl Scripter {
    pub fn new(kind: DeviceKind, client: ClientId) -> Self {
        Self {
            kind,
            client,
            tick: 0,
            hand: Pose::IDENTITY,
            events: Vec::new(),
        }
    }

    /// Continues at `tick` (must not go backwards).
    pub fn at(mut self, tick: u64) -> Self {
        self.tick = self.tick.max(tick);
        self
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn hand(&self) -> Pose {
        self.hand
    }

    fn push(&mut self, raw: RawKind) {
        self.events.push(RawEvent {
            tick: self.tick,
            client: self.client,
            raw,
        });
    }

    fn pose_event(&mut self, pose: Pose) {
        self.hand = pose;
        let raw = match self.kind {
            DeviceKind::AR => RawKind::ArHeadPose {
                pose: head_from_virtual_hand(&pose),
            },
            DeviceKind::VR => RawKind::VrHandPose {
                hand: SCRIPT_VR_HAND,
                pose,
            },
        };
        self.push(raw);
        self.tick += 1;
    }

    /// Places the hand at `pose` in one tick.
    pub fn hand_to(&mut self, pose: Pose) -> &mut Self {
        self.pose_event(pose);
        self
    }

    /// Moves the hand to `to` over `ticks` evenly spaced pose events.
    pub fn move_hand(&mut self, to: Pose, ticks: u32) -> &mut Self {
        let from = self.hand;
        let n = ticks.max(1);
        for i in 1..=n {
            let t = f64::from(i) / f64::from(n);
            let pose = if i == n {
                to
            } else {
                Pose::new(
                    from.position.lerp(to.position, t),
                    from.rotation.slerp(to.rotation, t),
                )
            };
            self.pose_event(pose);
        }
        self
    }

    pub fn grab(&mut self) -> &mut Self {
        match self.kind {
            DeviceKind::AR => self.push(RawKind::ArPinchStart),
            DeviceKind::VR => self.push(RawKind::VrGripDown {
                hand: SCRIPT_VR_HAND,
            }),
        }
        self.tick += 1;
        self
    }

    pub fn release(&mut self) -> &mut Self {
        match self.kind {
            DeviceKind::AR => self.push(RawKind::ArPinchEnd),
            DeviceKind::VR => self.push(RawKind::VrGripUp {
                hand: SCRIPT_VR_HAND,
            }),
        }
        self.tick += 1;
        self
    }

    /// Tap (AR) or trigger press (VR) on whatever the hand points at.
    pub fn select(&mut self) -> &mut Self {
        match self.kind {
            DeviceKind::AR => {
                self.push(RawKind::ArTapDown);
                self.push(RawKind::ArTapUp);
            }
            DeviceKind::VR => self.trigger(),
        }
        self.tick += 1;
        self
    }

    /// "use" voice command (AR) or trigger press (VR) on the held tool.
    pub fn activate_tool(&mut self) -> &mut Self {
        match self.kind {
            DeviceKind::AR => self.push(RawKind::ArVoice { word: "use".into() }),
            DeviceKind::VR => self.trigger(),
        }
        self.tick += 1;
        self
    }

    fn trigger(&mut self) {
        self.push(RawKind::VrTriggerDown {
            hand: SCRIPT_VR_HAND,
        });
        self.push(RawKind::VrTriggerUp {
            hand: SCRIPT_VR_HAND,
        });
    }

    pub fn wait(&mut self, ticks: u64) -> &mut Self {
        self.tick += ticks;
        self
    }

    pub fn events(&self) -> &[RawEvent] {
        &self.events
    }

    pub fn finish(self) -> Vec<RawEvent> {
        self.events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::{map_raw_input, CanonicalKind};
    use crate::math::{UnitQuat, Vec3};
    use crate::scene::SceneState;

    fn hand_after(kind: DeviceKind, pose: Pose) -> Pose {
        let mut s = Scripter::new(kind, 1);
        s.hand_to(pose);
        let ev = &s.events()[0];
        let out = map_raw_input(&kind.profile(), ev, &SceneState::new(), &[]).unwrap();
        match &out[0].kind {
            CanonicalKind::HandMoved { pose, .. } => *pose,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn both_devices_land_the_hand_in_the_same_place() {
        let pose = Pose::new(
            Vec3::new(0.3, 1.2, -0.4),
            UnitQuat::from_axis_angle(Vec3::new(1.0, 2.0, 0.5), 0.7).unwrap(),
        );
        let ar = hand_after(DeviceKind::AR, pose);
        let vr = hand_after(DeviceKind::VR, pose);
        assert!(ar.position.distance(vr.position) < 1e-12);
        assert!(crate::math::rot_angle_between(ar.rotation, vr.rotation) < 1e-6);
    }

    #[test]
    fn move_hand_spreads_over_ticks() {
        let mut s = Scripter::new(DeviceKind::VR, 2).at(10);
        s.move_hand(Pose::from_position(Vec3::new(1.0, 0.0, 0.0)), 4).grab();
        let ticks: Vec<u64> = s.events().iter().map(|e| e.tick).collect();
        assert_eq!(ticks, vec![10, 11, 12, 13, 14]);
        assert_eq!(s.hand().position, Vec3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            s.events()[4].raw,
            RawKind::VrGripDown { hand: Hand::Right }
        ));
    }
}
