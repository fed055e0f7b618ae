//! Scene object model and canonical state hashing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::math::{Pose, Vec3};

/// Fixed simulation step: 20 ms (50 Hz).
pub const TICK_MS: u64 = 20;
pub const TICK_SECONDS: f64 = TICK_MS as f64 / 1000.0;

/// Position quantum used by the state hash, meters.
pub const POSITION_QUANTUM: f64 = 1e-4;
/// Quaternion component quantum used by the state hash.
pub const ROTATION_QUANTUM: f64 = 1e-4;

pub type ClientId = u32;
pub type ObjectId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Interactable,
    Tool,
    StorytellerTrigger,
    ArVisible,
    IkChain,
}

impl Tag {
    pub const ALL: [Tag; 5] = [
        Tag::Interactable,
        Tag::Tool,
        Tag::StorytellerTrigger,
        Tag::ArVisible,
        Tag::IkChain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Interactable => "interactable",
            Tag::Tool => "tool",
            Tag::StorytellerTrigger => "storyteller_trigger",
            Tag::ArVisible => "ar_visible",
            Tag::IkChain => "ik_chain",
        }
    }

    pub fn parse(s: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hand identifier. AR clients drive a single `Virtual` hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hand {
    Left,
    Right,
    Virtual,
}

impl Hand {
    fn code(self) -> u8 {
        match self {
            Hand::Left => 0,
            Hand::Right => 1,
            Hand::Virtual => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HandRef {
    pub client: ClientId,
    pub hand: Hand,
}

impl HandRef {
    pub fn new(client: ClientId, hand: Hand) -> Self {
        Self { client, hand }
    }
}

/// How a grabbed object follows the hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrabMode {
    /// Velocity servoing toward the hand-relative target.
    #[default]
    Velocity,
    /// Rigid attachment to the hand frame.
    Parenting,
}

impl GrabMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GrabMode::Velocity => "velocity",
            GrabMode::Parenting => "parenting",
        }
    }

    pub fn parse(s: &str) -> Option<GrabMode> {
        match s {
            "velocity" => Some(GrabMode::Velocity),
            "parenting" => Some(GrabMode::Parenting),
            _ => None,
        }
    }
}

/// Spherical target region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: Vec3,
    pub radius: f64,
}

impl Region {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.distance(self.center) <= self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tint {
    pub color: String,
    pub expires_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: ObjectId,
    pub pose: Pose,
    pub initial_pose: Pose,
    pub tags: BTreeSet<Tag>,
    pub held_by: Option<HandRef>,
    pub tint: Option<Tint>,
}

impl SceneObject {
    pub fn new(id: impl Into<ObjectId>, pose: Pose, tags: impl IntoIterator<Item = Tag>) -> Self {
        Self {
            id: id.into(),
            pose,
            initial_pose: pose,
            tags: tags.into_iter().collect(),
            held_by: None,
            tint: None,
        }
    }

    pub fn has(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn position(&self) -> Vec3 {
        self.pose.position
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneState {
    pub tick: u64,
    pub objects: BTreeMap<ObjectId, SceneObject>,
    pub hands: BTreeMap<HandRef, Pose>,
}

impl SceneState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an object, returning `false` if the id is already taken.
    pub fn insert(&mut self, obj: SceneObject) -> bool {
        if self.objects.contains_key(&obj.id) {
            return false;
        }
        self.objects.insert(obj.id.clone(), obj);
        true
    }

    pub fn get(&self, id: &str) -> Option<&SceneObject> {
        self.objects.get(id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut SceneObject> {
        self.objects.get_mut(id)
    }

    pub fn hand_pose(&self, hand: HandRef) -> Option<Pose> {
        self.hands.get(&hand).copied()
    }

    /// The object currently held by `hand`, if any.
    pub fn held_object(&self, hand: HandRef) -> Option<&SceneObject> {
        self.objects.values().find(|o| o.held_by == Some(hand))
    }
}

/// 64-bit FNV-1a.
#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv1a {
    pub fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_i64(&mut self, v: i64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_str(&mut self, s: &str) {
        self.write_u64(s.len() as u64);
        self.write(s.as_bytes());
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

fn quantize(v: f64, quantum: f64) -> i64 {
    let q = (v / quantum).round();
    // -0 and 0 collapse here.
    q as i64
}

/// Appends the canonical byte form of a pose: quantized position, then the
/// sign-normalized (w >= 0) quantized rotation.
pub fn hash_pose(h: &mut Fnv1a, pose: &Pose) {
    for c in pose.position.to_array() {
        h.write_i64(quantize(c, POSITION_QUANTUM));
    }
    for c in pose.rotation.canonical().quat().to_array() {
        h.write_i64(quantize(c, ROTATION_QUANTUM));
    }
}

fn hash_objects(h: &mut Fnv1a, scene: &SceneState) {
    // BTreeMap iterates in lexicographic id order.
    h.write_u64(scene.objects.len() as u64);
    for obj in scene.objects.values() {
        h.write_str(&obj.id);
        hash_pose(h, &obj.pose);
        match obj.held_by {
            Some(hr) => {
                h.write(&[1]);
                h.write_u64(u64::from(hr.client));
                h.write(&[hr.hand.code()]);
            }
            None => h.write(&[0]),
        }
        match &obj.tint {
            Some(t) => {
                h.write(&[1]);
                h.write_str(&t.color);
                h.write_u64(t.expires_at);
            }
            None => h.write(&[0]),
        }
    }
}

/// Canonical scene hash. Excludes the tick counter and hand poses.
pub fn state_hash(scene: &SceneState) -> u64 {
    let mut h = Fnv1a::default();
    hash_objects(&mut h, scene);
    h.finish()
}

/// Scene hash extended with caller-supplied bytes (e.g. action statuses).
pub fn state_hash_with(scene: &SceneState, extra: &[u8]) -> u64 {
    let mut h = Fnv1a::default();
    hash_objects(&mut h, scene);
    h.write(extra);
    h.finish()
}

/// Hash over `(id, pose)` pairs only; used to compare replicated poses
/// against the authoritative scene. Input order does not matter.
pub fn poses_hash<'a>(poses: impl IntoIterator<Item = (&'a str, &'a Pose)>) -> u64 {
    let sorted: BTreeMap<&str, &Pose> = poses.into_iter().collect();
    let mut h = Fnv1a::default();
    h.write_u64(sorted.len() as u64);
    for (id, pose) in sorted {
        h.write_str(id);
        hash_pose(&mut h, pose);
    }
    h.finish()
}

/// [`poses_hash`] over every object in the scene.
pub fn scene_poses_hash(scene: &SceneState) -> u64 {
    poses_hash(scene.objects.values().map(|o| (o.id.as_str(), &o.pose)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::UnitQuat;

    fn sample() -> SceneState {
        let mut s = SceneState::new();
        s.insert(SceneObject::new(
            "Sponza",
            Pose::from_position(Vec3::new(0.0, 1.0, 0.0)),
            [Tag::Interactable],
        ));
        s.insert(SceneObject::new(
            "Church",
            Pose::from_position(Vec3::new(0.5, 1.0, 0.2)),
            [Tag::Interactable, Tag::StorytellerTrigger],
        ));
        s
    }

    #[test]
    fn fnv_known_vector() {
        let mut h = Fnv1a::default();
        h.write(b"a");
        assert_eq!(h.finish(), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn equal_states_hash_equal() {
        assert_eq!(state_hash(&sample()), state_hash(&sample()));
    }

    #[test]
    fn one_meter_displacement_changes_hash() {
        let mut b = sample();
        b.get_mut("Sponza").unwrap().pose.position.x += 1.0;
        assert_ne!(state_hash(&sample()), state_hash(&b));
    }

    #[test]
    fn micro_displacement_is_below_quantum() {
        let mut b = sample();
        b.get_mut("Sponza").unwrap().pose.position.x += 1e-6;
        assert_eq!(state_hash(&sample()), state_hash(&b));
    }

    #[test]
    fn tick_and_hands_are_excluded() {
        let mut b = sample();
        b.tick = 999;
        b.hands.insert(HandRef::new(1, Hand::Left), Pose::from_position(Vec3::X));
        assert_eq!(state_hash(&sample()), state_hash(&b));
    }

    #[test]
    fn held_and_tint_are_included() {
        let mut b = sample();
        b.get_mut("Sponza").unwrap().held_by = Some(HandRef::new(1, Hand::Right));
        assert_ne!(state_hash(&sample()), state_hash(&b));
        let mut c = sample();
        c.get_mut("Sponza").unwrap().tint = Some(Tint {
            color: "red".into(),
            expires_at: 50,
        });
        assert_ne!(state_hash(&sample()), state_hash(&c));
    }

    #[test]
    fn rotation_double_cover_hashes_equal() {
        let q = UnitQuat::from_axis_angle(Vec3::Y, 1.0).unwrap();
        let mut a = sample();
        let mut b = sample();
        a.get_mut("Sponza").unwrap().pose.rotation = q;
        b.get_mut("Sponza").unwrap().pose.rotation = -q;
        assert_eq!(state_hash(&a), state_hash(&b));
    }

    #[test]
    fn poses_hash_ignores_input_order() {
        let p1 = Pose::from_position(Vec3::X);
        let p2 = Pose::from_position(Vec3::Y);
        assert_eq!(
            poses_hash([("a", &p1), ("b", &p2)]),
            poses_hash([("b", &p2), ("a", &p1)])
        );
    }
}
