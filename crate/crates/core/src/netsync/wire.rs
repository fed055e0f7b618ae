//! JSON-lines session protocol. Every message is one JSON object tagged by
//! `"t"` and terminated by a single LF.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::input::{DeviceKind, DeviceProfile, RawEvent};
use crate::math::{DualQuat, Pose};
use crate::runtime::{ActionStatus, OutputEvent};
use crate::scene::{ClientId, HandRef, ObjectId, SceneObject, Tag, Tint};

/// Dual quaternion as `[rw, rx, ry, rz, dw, dx, dy, dz]`.
pub type DqArray = [f64; 8];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WireError {
    #[error("malformed message at '{path}': {message}")]
    Malformed { path: String, message: String },
    #[error("field '{field}': non-unit dual quaternion ({detail})")]
    NonUnit { field: String, detail: String },
    #[error("field '{field}': {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSnapshot {
    pub id: ObjectId,
    pub dq: DqArray,
    pub tags: Vec<Tag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_by: Option<HandRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tint: Option<Tint>,
}

impl ObjectSnapshot {
    pub fn from_object(o: &SceneObject) -> Self {
        Self {
            id: o.id.clone(),
            dq: pose_to_dq(&o.pose),
            tags: o.tags.iter().copied().collect(),
            held_by: o.held_by,
            tint: o.tint.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub path: String,
    pub status: ActionStatus,
}

/// Full session state handed to a joining client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub scenario: String,
    pub objects: Vec<ObjectSnapshot>,
    pub actions: Vec<ActionEntry>,
    /// Holograms, aidlines or quiz of the currently active action.
    pub active: Vec<OutputEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t")]
pub enum WireMessage {
    #[serde(rename = "hello")]
    Hello {
        session: String,
        device_profile: DeviceProfile,
    },
    #[serde(rename = "welcome")]
    Welcome {
        client: ClientId,
        digest: String,
        snapshot: Snapshot,
    },
    #[serde(rename = "refuse")]
    Refuse { reason: String },
    #[serde(rename = "input")]
    Input(RawEvent),
    #[serde(rename = "pose")]
    PoseDelta { id: ObjectId, dq: DqArray, tick: u64 },
    #[serde(rename = "key")]
    Keyframe {
        tick: u64,
        poses: BTreeMap<ObjectId, DqArray>,
    },
    #[serde(rename = "act")]
    ActionState { path: String, status: ActionStatus },
    #[serde(rename = "out")]
    Output { tick: u64, event: OutputEvent },
    #[serde(rename = "hash")]
    StateHash { tick: u64, hash: String },
    #[serde(rename = "bye")]
    Bye,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelClass {
    ReliableOrdered,
    Unreliable,
}

impl WireMessage {
    pub fn tag(&self) -> &'static str {
        match self {
            WireMessage::Hello { .. } => "hello",
            WireMessage::Welcome { .. } => "welcome",
            WireMessage::Refuse { .. } => "refuse",
            WireMessage::Input(_) => "input",
            WireMessage::PoseDelta { .. } => "pose",
            WireMessage::Keyframe { .. } => "key",
            WireMessage::ActionState { .. } => "act",
            WireMessage::Output { .. } => "out",
            WireMessage::StateHash { .. } => "hash",
            WireMessage::Bye => "bye",
        }
    }

    pub fn channel(&self) -> ChannelClass {
        match self {
            WireMessage::PoseDelta { .. } | WireMessage::Keyframe { .. } => ChannelClass::Unreliable,
            _ => ChannelClass::ReliableOrdered,
        }
    }

    pub fn hello(kind: DeviceKind) -> Self {
        WireMessage::Hello {
            session: String::new(),
            device_profile: kind.profile(),
        }
    }
}

pub fn pose_to_dq(p: &Pose) -> DqArray {
    DualQuat::from_pose_unchecked(p).to_array()
}

/// Checks the unit conditions and converts to a pose.
pub fn dq_to_pose_checked(field: &str, dq: &DqArray) -> Result<Pose, WireError> {
    let q = DualQuat::from_array(*dq).map_err(|e| WireError::NonUnit {
        field: field.to_string(),
        detail: e.to_string(),
    })?;
    Ok(q.to_pose_unchecked())
}

/// Formats a state hash as 16 lowercase hex digits.
pub fn hash_hex(h: u64) -> String {
    format!("{h:016x}")
}

pub fn parse_hash_hex(s: &str) -> Option<u64> {
    (s.len() == 16).then(|| u64::from_str_radix(s, 16).ok()).flatten()
}

/// One JSON object plus LF.
pub fn encode(msg: &WireMessage) -> String {
    let mut s = serde_json::to_string(msg).expect("wire messages always serialize");
    s.push('\n');
    s
}

pub fn decode(line: &str) -> Result<WireMessage, WireError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| WireError::Malformed {
        path: ".".into(),
        message: e.to_string(),
    })?;
    let msg = from_value(value)?;
    validate(&msg)?;
    Ok(msg)
}

fn fields<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, WireError> {
    serde_path_to_error::deserialize(value).map_err(|e| WireError::Malformed {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

/// Per-variant decoding so errors carry the path of the offending field
/// (serde's internally tagged enums lose it).
fn from_value(mut value: serde_json::Value) -> Result<WireMessage, WireError> {
    #[derive(Deserialize)]
    struct Hello {
        session: String,
        device_profile: DeviceProfile,
    }
    #[derive(Deserialize)]
    struct Welcome {
        client: ClientId,
        digest: String,
        snapshot: Snapshot,
    }
    #[derive(Deserialize)]
    struct Refuse {
        reason: String,
    }
    #[derive(Deserialize)]
    struct Pose {
        id: ObjectId,
        dq: DqArray,
        tick: u64,
    }
    #[derive(Deserialize)]
    struct Key {
        tick: u64,
        poses: BTreeMap<ObjectId, DqArray>,
    }
    #[derive(Deserialize)]
    struct Act {
        path: String,
        status: ActionStatus,
    }
    #[derive(Deserialize)]
    struct Out {
        tick: u64,
        event: OutputEvent,
    }
    #[derive(Deserialize)]
    struct Hash {
        tick: u64,
        hash: String,
    }

    let tag = match value.as_object_mut().map(|o| o.remove("t")) {
        None => {
            return Err(WireError::Malformed {
                path: ".".into(),
                message: "expected a JSON object".into(),
            })
        }
        Some(None) => {
            return Err(WireError::Malformed {
                path: "t".into(),
                message: "missing message tag".into(),
            })
        }
        Some(Some(serde_json::Value::String(t))) => t,
        Some(Some(other)) => {
            return Err(WireError::Malformed {
                path: "t".into(),
                message: format!("tag must be a string, got {other}"),
            })
        }
    };
    Ok(match tag.as_str() {
        "hello" => {
            let m: Hello = fields(value)?;
            WireMessage::Hello {
                session: m.session,
                device_profile: m.device_profile,
            }
        }
        "welcome" => {
            let m: Welcome = fields(value)?;
            WireMessage::Welcome {
                client: m.client,
                digest: m.digest,
                snapshot: m.snapshot,
            }
        }
        "refuse" => WireMessage::Refuse {
            reason: fields::<Refuse>(value)?.reason,
        },
        "input" => WireMessage::Input(fields(value)?),
        "pose" => {
            let m: Pose = fields(value)?;
            WireMessage::PoseDelta {
                id: m.id,
                dq: m.dq,
                tick: m.tick,
            }
        }
        "key" => {
            let m: Key = fields(value)?;
            WireMessage::Keyframe {
                tick: m.tick,
                poses: m.poses,
            }
        }
        "act" => {
            let m: Act = fields(value)?;
            WireMessage::ActionState {
                path: m.path,
                status: m.status,
            }
        }
        "out" => {
            let m: Out = fields(value)?;
            WireMessage::Output {
                tick: m.tick,
                event: m.event,
            }
        }
        "hash" => {
            let m: Hash = fields(value)?;
            WireMessage::StateHash {
                tick: m.tick,
                hash: m.hash,
            }
        }
        "bye" => WireMessage::Bye,
        other => {
            return Err(WireError::Malformed {
                path: "t".into(),
                message: format!("unknown message tag '{other}'"),
            })
        }
    })
}

fn validate(msg: &WireMessage) -> Result<(), WireError> {
    match msg {
        WireMessage::PoseDelta { dq, .. } => {
            dq_to_pose_checked("dq", dq)?;
        }
        WireMessage::Keyframe { poses, .. } => {
            for (id, dq) in poses {
                dq_to_pose_checked(&format!("poses.{id}"), dq)?;
            }
        }
        WireMessage::Welcome { snapshot, .. } => {
            for (i, o) in snapshot.objects.iter().enumerate() {
                dq_to_pose_checked(&format!("snapshot.objects[{i}].dq"), &o.dq)?;
            }
        }
        WireMessage::Hello { device_profile, .. } => {
            let p = device_profile;
            DeviceProfile::new(p.kind, p.fov_deg, p.capabilities.iter().copied()).map_err(|e| {
                WireError::Invalid {
                    field: "device_profile".into(),
                    message: e.to_string(),
                }
            })?;
        }
        WireMessage::StateHash { hash, .. }
            if parse_hash_hex(hash).is_none() => {
                return Err(WireError::Invalid {
                    field: "hash".into(),
                    message: format!("expected 16 hex digits, got '{hash}'"),
                });
            }
        _ => {}
    }
    Ok(())
}
