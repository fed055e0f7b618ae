//! Headless, deterministic cross-reality training-scenario engine.
//!
//! Scenarios are authored as Lesson/Stage/Action text ([`dsl`]), compiled into
//! an ordered [`dsl::RuntimeProgram`] and executed by the [`runtime::Engine`].
//! AR gestures and VR controller input are mapped to one canonical event
//! vocabulary by [`input`]; grabbing, insertion checks and IK live in
//! [`interaction`]. [`netsync`] replicates a session to many clients over a
//! simulated network with dual-quaternion interpolation.

pub mod dsl;
pub mod eventlog;
pub mod input;
pub mod interaction;
pub mod math;
pub mod netsync;
pub mod runtime;
pub mod scene;

pub use math::{DualQuat, Pose, Quat, UnitQuat, Vec3};
pub use scene::{ClientId, Hand, HandRef, SceneObject, SceneState, Tag};
