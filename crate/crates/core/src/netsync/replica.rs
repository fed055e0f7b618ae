//! Client-side display replica: buffers server pose samples by tick and
//! renders a fixed delay in the past with ScLERP between bracketing samples.

use std::collections::BTreeMap;

use crate::math::{DualQuat, Pose};
use crate::runtime::{ActionStatus, OutputEvent};
use crate::scene::{poses_hash, ClientId, ObjectId, TICK_MS};

use super::wire::{parse_hash_hex, DqArray, WireMessage};

/// Render delay behind the newest server time, milliseconds.
pub const INTERPOLATION_DELAY_MS: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct ClientReplica {
    pub client: Option<ClientId>,
    pub digest: Option<String>,
    pub delay_ms: f64,
    buffers: BTreeMap<ObjectId, BTreeMap<u64, DualQuat>>,
    rendered: BTreeMap<ObjectId, Pose>,
    /// Render time of the previous `render`, in ticks.
    last_render_tick: f64,
    /// Newest server tick carried by any received message.
    newest_tick: Option<u64>,
    /// Estimated server time and the local time it was estimated at, ms.
    clock: Option<(f64, f64)>,
    pub outputs: Vec<(u64, OutputEvent)>,
    pub actions: BTreeMap<String, ActionStatus>,
    pub hashes: Vec<(u64, u64)>,
    pub refused: Option<String>,
}

impl Default for ClientReplica {
    fn default() -> Self {
        Self::new(INTERPOLATION_DELAY_MS)
    }
}

impl ClientReplica {
    pub fn new(delay_ms: f64) -> Self {
        Self {
            client: None,
            digest: None,
            delay_ms,
            buffers: BTreeMap::new(),
            rendered: BTreeMap::new(),
            last_render_tick: f64::NEG_INFINITY,
            newest_tick: None,
            clock: None,
            outputs: Vec::new(),
            actions: BTreeMap::new(),
            hashes: Vec::new(),
            refused: None,
        }
    }

    fn saw_tick(&mut self, tick: u64) {
        self.newest_tick = Some(self.newest_tick.map_or(tick, |t| t.max(tick)));
    }

    fn insert(&mut self, id: &str, tick: u64, dq: &DqArray) {
        // Samples older than what was already shown cannot matter any more.
        if (tick as f64) < self.last_render_tick.floor() {
            return;
        }
        let Ok(q) = DualQuat::from_array(*dq) else {
            return;
        };
        self.buffers.entry(id.to_string()).or_default().insert(tick, q);
    }

    pub fn apply(&mut self, msg: &WireMessage) {
        match msg {
            WireMessage::Welcome { snapshot, .. } => self.saw_tick(snapshot.tick),
            WireMessage::PoseDelta { tick, .. }
            | WireMessage::Keyframe { tick, .. }
            | WireMessage::Output { tick, .. }
            | WireMessage::StateHash { tick, .. } => self.saw_tick(*tick),
            _ => {}
        }
        match msg {
            WireMessage::Welcome {
                client,
                digest,
                snapshot,
            } => {
                self.client = Some(*client);
                self.digest = Some(digest.clone());
                for o in &snapshot.objects {
                    self.insert(&o.id, snapshot.tick, &o.dq);
                }
                for a in &snapshot.actions {
                    self.actions.insert(a.path.clone(), a.status);
                }
                self.outputs
                    .extend(snapshot.active.iter().cloned().map(|o| (snapshot.tick, o)));
            }
            WireMessage::PoseDelta { id, dq, tick } => self.insert(id, *tick, dq),
            WireMessage::Keyframe { tick, poses } => {
                for (id, dq) in poses {
                    self.insert(id, *tick, dq);
                }
            }
            WireMessage::ActionState { path, status } => {
                self.actions.insert(path.clone(), *status);
            }
            WireMessage::Output { tick, event } => self.outputs.push((*tick, event.clone())),
            WireMessage::StateHash { tick, hash } => {
                if let Some(h) = parse_hash_hex(hash) {
                    self.hashes.push((*tick, h));
                }
            }
            WireMessage::Refuse { reason } => self.refused = Some(reason.clone()),
            WireMessage::Hello { .. } | WireMessage::Input(_) | WireMessage::Bye => {}
        }
    }

    /// Poses at `delay` behind the estimated server time. Between two
    /// samples the pose is the ScLERP of the bracketing pair; past the newest
    /// sample it holds.
    ///
    /// `now_ms` is the local clock. The server time estimate starts at the
    /// newest tick received and advances with the local clock, jumping
    /// forward whenever a newer tick arrives earlier than expected. Network
    /// latency therefore shifts the render time instead of making every
    /// sample stale on arrival.
    pub fn render(&mut self, now_ms: f64) -> &BTreeMap<ObjectId, Pose> {
        let Some(newest) = self.newest_tick else {
            return &self.rendered;
        };
        let newest_ms = newest as f64 * TICK_MS as f64;
        let server_ms = match self.clock {
            Some((est, at)) => (est + (now_ms - at).max(0.0)).max(newest_ms),
            None => newest_ms,
        };
        self.clock = Some((server_ms, now_ms));
        let rt = ((server_ms - self.delay_ms) / TICK_MS as f64).max(self.last_render_tick);
        self.last_render_tick = rt;
        for (id, buf) in self.buffers.iter_mut() {
            let before = buf.range(..=rt.floor() as u64).next_back().map(|(t, q)| (*t, *q));
            let after = buf.range(rt.ceil() as u64..).next().map(|(t, q)| (*t, *q));
            let pose = match (before, after) {
                (Some((ta, a)), Some((tb, b))) if tb > ta => {
                    let t = ((rt - ta as f64) / (tb - ta) as f64).clamp(0.0, 1.0);
                    DualQuat::sclerp(&a, &b, t).map(|q| q.to_pose_unchecked()).ok()
                }
                (Some((_, a)), _) => Some(a.to_pose_unchecked()),
                // Nothing at or before the render time has arrived yet.
                (None, _) => None,
            };
            if let Some(p) = pose {
                self.rendered.insert(id.clone(), p);
            }
            // Keep the bracketing sample and everything newer.
            if let Some((ta, _)) = before {
                *buf = buf.split_off(&ta);
            }
        }
        &self.rendered
    }

    pub fn rendered(&self) -> &BTreeMap<ObjectId, Pose> {
        &self.rendered
    }

    /// Quantized hash of the rendered poses, comparable to
    /// [`crate::scene::scene_poses_hash`] of the server scene.
    pub fn poses_hash(&self) -> u64 {
        poses_hash(self.rendered.iter().map(|(k, v)| (k.as_str(), v)))
    }

    pub fn buffered_samples(&self, id: &str) -> usize {
        self.buffers.get(id).map_or(0, BTreeMap::len)
    }

    pub fn completed_actions(&self) -> Vec<String> {
        self.outputs
            .iter()
            .filter_map(|(_, o)| match o {
                OutputEvent::ActionCompleted { path } => Some(path.clone()),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{UnitQuat, Vec3};
    use crate::netsync::wire::pose_to_dq;

    fn delta(x: f64, tick: u64) -> WireMessage {
        WireMessage::PoseDelta {
            id: "A".into(),
            dq: pose_to_dq(&Pose::from_position(Vec3::new(x, 0.0, 0.0))),
            tick,
        }
    }

    fn render_at_tick(r: &mut ClientReplica, tick: f64) -> Pose {
        r.render(tick * TICK_MS as f64 + r.delay_ms)["A"]
    }

    #[test]
    fn midpoint_bracketing() {
        let mut r = ClientReplica::default();
        let a = Pose::from_position(Vec3::new(0.0, 0.0, 0.0));
        let b = Pose::new(
            Vec3::new(1.0, 0.0, 0.0),
            UnitQuat::from_axis_angle(Vec3::Z, 1.0).unwrap(),
        );
        r.apply(&WireMessage::PoseDelta { id: "A".into(), dq: pose_to_dq(&a), tick: 100 });
        r.apply(&WireMessage::PoseDelta { id: "A".into(), dq: pose_to_dq(&b), tick: 110 });
        let got = render_at_tick(&mut r, 105.0);
        let qa = DualQuat::from_pose(&a).unwrap();
        let qb = DualQuat::from_pose(&b).unwrap();
        let want = DualQuat::sclerp(&qa, &qb, 0.5).unwrap().to_pose().unwrap();
        assert!(got.position.distance(want.position) < 1e-12);
    }

    #[test]
    fn duplicates_are_idempotent() {
        let mut r = ClientReplica::default();
        r.apply(&delta(0.0, 1));
        r.apply(&delta(1.0, 3));
        r.apply(&delta(1.0, 3));
        assert_eq!(r.buffered_samples("A"), 2);
    }

    #[test]
    fn holds_past_newest_and_drops_stale() {
        let mut r = ClientReplica::default();
        r.apply(&delta(0.0, 1));
        r.apply(&delta(1.0, 3));
        r.render(0.0);
        assert_eq!(r.render(1000.0)["A"].position.x, 1.0);
        r.apply(&delta(5.0, 2));
        assert_eq!(r.buffered_samples("A"), 1);
        assert_eq!(r.render(1020.0)["A"].position.x, 1.0);
    }

    #[test]
    fn latency_beyond_delay_still_tracks_samples() {
        let mut r = ClientReplica::default();
        let lag = 8;
        for local in lag..100u64 {
            r.apply(&delta((local - lag) as f64, local - lag));
            let x = r.render(local as f64 * TICK_MS as f64)["A"].position.x;
            let delay_ticks = (INTERPOLATION_DELAY_MS / TICK_MS as f64) as u64;
            let want = (local - lag).saturating_sub(delay_ticks) as f64;
            assert!((x - want).abs() < 1e-9, "local {local}: {x} vs {want}");
        }
    }

    #[test]
    fn nothing_rendered_before_first_sample() {
        let mut r = ClientReplica::default();
        r.apply(&delta(0.0, 10));
        assert!(r.render(0.0).is_empty());
    }
}
