//! Scripted playthroughs derived from a compiled program: every action is
//! performed in order with the hand moving between assets, so the same plan
//! can be emitted for an AR or a VR device.

use thiserror::Error;
use xrsim_core::dsl::{RuntimeProgram, Task};
use xrsim_core::input::{DeviceKind, RawEvent, Scripter};
use xrsim_core::math::{Pose, UnitQuat, Vec3};
use xrsim_core::scene::{ClientId, Tag, TICK_SECONDS};

/// Idle ticks appended after the last scripted event.
pub const POST_ROLL_TICKS: u64 = 100;
/// Duration of each carry from pickup to target.
pub const CARRY_TICKS: u32 = 40;
/// Pause before a release so the hand is at rest (no throw).
pub const SETTLE_TICKS: u64 = 10;
/// Time spent holding a storyteller object.
pub const STORY_HOLD_TICKS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Correct,
    /// Releases the first insert rotated this many degrees about +Y from its
    /// target and stops there.
    WrongRotation { deg: f64 },
    /// Answers the first quiz with a wrong choice and stops there.
    WrongQuiz,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("action {path}: correct quiz choice has no icon to point at")]
    NoIcon { path: String },
    #[error("no wrong choice exists in quiz {path}")]
    NoWrongChoice { path: String },
    #[error("at least one client is required")]
    NoClients,
}

fn pose_of(program: &RuntimeProgram, idx: xrsim_core::dsl::AssetIndex) -> Pose {
    program.asset(idx).initial_pose
}

/// One segment of the plan, performed by a single client.
#[derive(Debug, Clone)]
enum Segment {
    Story(Pose),
    Quiz { icon: Pose },
    Insert { from: Pose, to: Pose },
    Remove { from: Pose, to: Pose },
    Tool { from: Pose, to: Pose, active_ticks: u64 },
    Use { from: Pose, center: Pose, reach: f64, strokes: u32 },
}

fn plan(program: &RuntimeProgram, variant: Variant) -> Result<Vec<Segment>, PlanError> {
    let mut out: Vec<Segment> = program
        .assets
        .iter()
        .filter(|a| a.tags.contains(&Tag::StorytellerTrigger) && a.tags.contains(&Tag::Interactable))
        .map(|a| Segment::Story(a.initial_pose))
        .collect();
    for action in &program.actions {
        let seg = match &action.task {
            Task::Quiz {
                choices, correct, ..
            } => {
                let pick = match variant {
                    Variant::WrongQuiz => choices
                        .iter()
                        .enumerate()
                        .position(|(i, c)| i != *correct && c.icon.is_some())
                        .ok_or_else(|| PlanError::NoWrongChoice {
                            path: action.path.clone(),
                        })?,
                    _ => *correct,
                };
                let icon = choices[pick].icon.ok_or_else(|| PlanError::NoIcon {
                    path: action.path.clone(),
                })?;
                out.push(Segment::Quiz {
                    icon: pose_of(program, icon),
                });
                if variant == Variant::WrongQuiz {
                    return Ok(out);
                }
                continue;
            }
            Task::Insert { object, target, .. } => {
                if let Variant::WrongRotation { deg } = variant {
                    let extra = UnitQuat::from_axis_angle(Vec3::Y, deg.to_radians())
                        .expect("+Y is a valid axis");
                    out.push(Segment::Insert {
                        from: pose_of(program, *object),
                        to: Pose::new(target.position, extra * target.rotation),
                    });
                    return Ok(out);
                }
                Segment::Insert {
                    from: pose_of(program, *object),
                    to: *target,
                }
            }
            Task::Remove {
                object,
                clearance_m,
            } => {
                let from = pose_of(program, *object);
                let lift = Vec3::new(0.0, clearance_m * 1.5 + 0.05, 0.0);
                Segment::Remove {
                    from,
                    to: Pose::new(from.position + lift, from.rotation),
                }
            }
            Task::Tool {
                tool,
                region,
                required_active_s,
            } => {
                let from = pose_of(program, *tool);
                Segment::Tool {
                    from,
                    to: Pose::new(region.center, from.rotation),
                    active_ticks: (required_active_s / TICK_SECONDS).ceil() as u64 + SETTLE_TICKS,
                }
            }
            Task::Use {
                implement,
                region,
                required_sweep_m,
            } => {
                let from = pose_of(program, *implement);
                let reach = region.radius * 0.8;
                Segment::Use {
                    from,
                    center: Pose::new(region.center, from.rotation),
                    reach,
                    strokes: (required_sweep_m / (2.0 * reach)).ceil() as u32 + 1,
                }
            }
        };
        out.push(seg);
    }
    Ok(out)
}

fn perform(s: &mut Scripter, seg: &Segment) {
    match *seg {
        Segment::Story(pose) => {
            s.hand_to(pose).grab().wait(STORY_HOLD_TICKS).release();
        }
        Segment::Quiz { icon } => {
            s.hand_to(icon).select();
        }
        Segment::Insert { from, to } | Segment::Remove { from, to } => {
            s.hand_to(from).grab().move_hand(to, CARRY_TICKS).wait(SETTLE_TICKS).release();
        }
        Segment::Tool {
            from,
            to,
            active_ticks,
        } => {
            s.hand_to(from)
                .grab()
                .move_hand(to, CARRY_TICKS)
                .wait(SETTLE_TICKS)
                .activate_tool()
                .wait(active_ticks)
                .release();
        }
        Segment::Use {
            from,
            center,
            reach,
            strokes,
        } => {
            s.hand_to(from).grab().move_hand(center, CARRY_TICKS);
            let offset = |sign: f64| {
                Pose::new(center.position + Vec3::new(sign * reach, 0.0, 0.0), center.rotation)
            };
            s.move_hand(offset(1.0), 10);
            for k in 0..strokes {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                s.move_hand(offset(sign), 20);
            }
            s.move_hand(center, 10).wait(SETTLE_TICKS).release();
        }
    }
}

/// The whole playthrough performed by one client.
pub fn single(
    program: &RuntimeProgram,
    kind: DeviceKind,
    client: ClientId,
    variant: Variant,
) -> Result<Vec<RawEvent>, PlanError> {
    let mut s = Scripter::new(kind, client).at(1);
    for seg in plan(program, variant)? {
        perform(&mut s, &seg);
    }
    Ok(s.finish())
}

/// The playthrough split between clients: segment `i` is performed by
/// client `i % devices.len()`, one after another. Returns one script per
/// client, indexed like `devices`; client ids are `1..=devices.len()`.
pub fn collaborative(
    program: &RuntimeProgram,
    devices: &[DeviceKind],
) -> Result<Vec<Vec<RawEvent>>, PlanError> {
    if devices.is_empty() {
        return Err(PlanError::NoClients);
    }
    let mut scripters: Vec<Scripter> = devices
        .iter()
        .enumerate()
        .map(|(i, k)| Scripter::new(*k, i as ClientId + 1))
        .collect();
    let mut clock = 1;
    for (i, seg) in plan(program, Variant::Correct)?.iter().enumerate() {
        let slot = i % devices.len();
        let mut s = std::mem::replace(&mut scripters[slot], Scripter::new(devices[slot], 0)).at(clock);
        perform(&mut s, seg);
        clock = s.tick() + SETTLE_TICKS;
        scripters[slot] = s;
    }
    Ok(scripters.into_iter().map(Scripter::finish).collect())
}

/// Last tick any event in `scripts` is stamped with.
pub fn last_tick<'a>(scripts: impl IntoIterator<Item = &'a RawEvent>) -> u64 {
    scripts.into_iter().map(|e| e.tick).max().unwrap_or(0)
}

/// Serializes a script as one raw event per line.
pub fn to_jsonl(events: &[RawEvent]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).expect("raw events serialize") + "\n")
        .collect()
}
