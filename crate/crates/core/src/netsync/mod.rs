//! Server-authoritative replication over a JSON-lines protocol.
//!
//! The [`Session`] runs the only engine. It broadcasts a keyframe of every
//! pose each `keyframe_interval` ticks and, in between, a [`WireMessage::PoseDelta`]
//! for each object that moved past the delta thresholds. Clients keep a
//! [`ClientReplica`] that renders `INTERPOLATION_DELAY_MS` in the past.

mod cluster;
mod replica;
mod session;
mod sim;
mod wire;

pub use cluster::{Cluster, SimClient};
pub use replica::{ClientReplica, INTERPOLATION_DELAY_MS};
pub use session::{Outbound, Session, SessionConfig};
pub use sim::{NetConfigError, NetSim, NetSimConfig};
pub use wire::{
    decode, dq_to_pose_checked, encode, hash_hex, parse_hash_hex, pose_to_dq, ActionEntry,
    ChannelClass, DqArray, ObjectSnapshot, Snapshot, WireError, WireMessage,
};
