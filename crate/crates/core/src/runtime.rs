//! Action state machine over a compiled [`RuntimeProgram`].
//!
//! Events are handled at the current tick and [`Engine::tick`] advances the
//! fixed clock. Actions complete strictly in program order; one action is
//! active at a time.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{AssetIndex, RuntimeProgram, Task};
use crate::input::{map_raw_input, CanonicalEvent, CanonicalKind, DeviceProfile, InputError, RawEvent};
use crate::interaction::{
    check_insert, grab_attach, grab_release, grab_step, solve_two_bone_ik, sweep_accumulate,
    throw_step, GrabBinding, GrabError, IkChain, InsertTolerance, ThrowState,
};
use crate::math::{Pose, Vec3};
use crate::scene::{
    state_hash_with, ClientId, Hand, HandRef, ObjectId, SceneObject, SceneState, Tag, Tint,
    TICK_SECONDS,
};

/// How long an error tint stays on, in ticks.
pub const TINT_TICKS: u64 = 50;
pub const ERROR_TINT: &str = "red";
/// Wrong placements are flagged inside this multiple of `eps_pos`.
pub const ERROR_REGION_FACTOR: f64 = 2.0;
/// Slack for accumulated floating-point thresholds.
const THRESHOLD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("program has no actions")]
    EmptyProgram,
    #[error("unknown client {0}")]
    UnknownClient(ClientId),
    #[error("event at tick {event} is ahead of the engine clock {now}")]
    FutureTick { event: u64, now: u64 },
    #[error(transparent)]
    Input(#[from] InputError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionStatus {
    Pending,
    Active,
    Completed,
}

impl ActionStatus {
    fn code(self) -> u8 {
        match self {
            ActionStatus::Pending => 0,
            ActionStatus::Active => 1,
            ActionStatus::Completed => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotifyLevel {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputEvent {
    HologramShown { object: String, target: Pose },
    AidlineShown { text: String, anchor: Vec3 },
    /// Question and choice labels of a quiz that just became active.
    QuizPosed { question: String, choices: Vec<String> },
    Notification { level: NotifyLevel, text: String },
    TintApplied { object: ObjectId, color: String, duration_ticks: u64 },
    ActionCompleted { path: String },
    ScenarioCompleted,
    NarrationStarted { asset: ObjectId },
    NarrationLine { text: String, tick: u64 },
    QuizFeedback { choice: usize, correct: bool },
}

/// Per-action scratch state, reset on activation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionProgress {
    pub tool_active_ticks: u64,
    /// Set by a tool activation, cleared when the tool is released.
    pub tool_latched: bool,
    pub sweep_m: f64,
    pub last_sweep_pos: Option<Vec3>,
    pub insert_latched: bool,
    pub remove_displacement_m: f64,
    pub quiz_answered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveQuiz {
    pub question: String,
    pub choices: Vec<String>,
    /// Scene object that stands for each choice, if any.
    pub icons: Vec<Option<ObjectId>>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    program: RuntimeProgram,
    seed: u64,
    scene: SceneState,
    current: usize,
    statuses: Vec<ActionStatus>,
    progress: ActionProgress,
    bindings: Vec<GrabBinding>,
    throws: Vec<ThrowState>,
    clients: BTreeSet<ClientId>,
    /// `(due tick, text)` in emission order.
    narration: Vec<(u64, String)>,
    narrated: BTreeSet<ObjectId>,
    ik: BTreeMap<ObjectId, IkChain>,
    locked: BTreeSet<ObjectId>,
    /// First action index that has each asset as its subject.
    owner: BTreeMap<ObjectId, usize>,
    completions: Vec<(String, u64)>,
    tolerance: InsertTolerance,
}

impl Engine {
    /// Builds the scene at initial poses and activates the first action. The
    /// activation outputs are available from [`Engine::activation_outputs`].
    pub fn new(program: RuntimeProgram, seed: u64) -> Result<(Self, Vec<OutputEvent>), EngineError> {
        if program.actions.is_empty() {
            return Err(EngineError::EmptyProgram);
        }
        let mut scene = SceneState::new();
        let mut ik = BTreeMap::new();
        for a in &program.assets {
            scene.insert(SceneObject::new(a.id.clone(), a.initial_pose, a.tags.iter().copied()));
            if let Some((l1, l2)) = a.ik {
                ik.insert(a.id.clone(), IkChain::new(a.initial_pose.position, l1, l2));
            }
        }
        let mut owner = BTreeMap::new();
        for (i, action) in program.actions.iter().enumerate() {
            if let Some(idx) = action.task.subject() {
                owner.entry(program.asset(idx).id.clone()).or_insert(i);
            }
        }
        let n = program.actions.len();
        let mut engine = Self {
            program,
            seed,
            scene,
            current: 0,
            statuses: vec![ActionStatus::Pending; n],
            progress: ActionProgress::default(),
            bindings: Vec::new(),
            throws: Vec::new(),
            clients: BTreeSet::new(),
            narration: Vec::new(),
            narrated: BTreeSet::new(),
            ik,
            locked: BTreeSet::new(),
            owner,
            completions: Vec::new(),
            tolerance: InsertTolerance::default(),
        };
        let mut out = Vec::new();
        engine.activate(0, &mut out);
        Ok((engine, out))
    }

    pub fn program(&self) -> &RuntimeProgram {
        &self.program
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scene(&self) -> &SceneState {
        &self.scene
    }

    pub fn now(&self) -> u64 {
        self.scene.tick
    }

    pub fn current_action(&self) -> usize {
        self.current
    }

    pub fn statuses(&self) -> &[ActionStatus] {
        &self.statuses
    }

    pub fn progress(&self) -> &ActionProgress {
        &self.progress
    }

    pub fn bindings(&self) -> &[GrabBinding] {
        &self.bindings
    }

    pub fn is_complete(&self) -> bool {
        self.current >= self.statuses.len()
    }

    /// `(path, tick)` of each completed action in completion order.
    pub fn completions(&self) -> &[(String, u64)] {
        &self.completions
    }

    pub fn tolerance(&self) -> InsertTolerance {
        self.tolerance
    }

    /// Outputs the current action would emit on activation (used for late
    /// joiners and snapshots).
    pub fn activation_outputs(&self) -> Vec<OutputEvent> {
        let mut out = Vec::new();
        if !self.is_complete() {
            self.activation_payload(self.current, &mut out);
        }
        out
    }

    pub fn active_quiz(&self) -> Option<ActiveQuiz> {
        let action = self.program.actions.get(self.current)?;
        match &action.task {
            Task::Quiz {
                question, choices, ..
            } => Some(ActiveQuiz {
                question: question.clone(),
                choices: choices.iter().map(|c| c.label.clone()).collect(),
                icons: choices
                    .iter()
                    .map(|c| c.icon.map(|i| self.program.asset(i).id.clone()))
                    .collect(),
            }),
            _ => None,
        }
    }

    fn quiz_icons(&self) -> Vec<Option<ObjectId>> {
        self.active_quiz().map(|q| q.icons).unwrap_or_default()
    }

    pub fn add_client(&mut self, id: ClientId) -> bool {
        self.clients.insert(id)
    }

    /// Drops a client, releasing anything it holds.
    pub fn remove_client(&mut self, id: ClientId) -> Vec<OutputEvent> {
        let mut out = Vec::new();
        for hand in [Hand::Left, Hand::Right, Hand::Virtual] {
            let h = HandRef::new(id, hand);
            if self.bindings.iter().any(|b| b.hand == h) {
                self.release(h, &mut out);
            }
            self.scene.hands.remove(&h);
        }
        self.clients.remove(&id);
        out
    }

    pub fn has_client(&self, id: ClientId) -> bool {
        self.clients.contains(&id)
    }

    /// State hash over the scene plus action statuses.
    pub fn state_hash(&self) -> u64 {
        let mut extra = Vec::with_capacity(8 + self.statuses.len());
        extra.extend_from_slice(&(self.current as u64).to_le_bytes());
        extra.extend(self.statuses.iter().map(|s| s.code()));
        state_hash_with(&self.scene, &extra)
    }

    /// Maps a raw device event through `profile` and handles the result.
    pub fn handle_raw(
        &mut self,
        profile: &DeviceProfile,
        raw: &RawEvent,
    ) -> Result<Vec<OutputEvent>, EngineError> {
        let events = self.canonicalize(profile, raw)?;
        let mut out = Vec::new();
        for ev in &events {
            out.extend(self.handle(ev)?);
        }
        Ok(out)
    }

    /// The canonical events `raw` maps to in the current state, without
    /// applying them.
    pub fn canonicalize(
        &self,
        profile: &DeviceProfile,
        raw: &RawEvent,
    ) -> Result<Vec<CanonicalEvent>, EngineError> {
        self.check_event(raw.client, raw.tick)?;
        Ok(map_raw_input(profile, raw, &self.scene, &self.quiz_icons())?)
    }

    fn check_event(&self, client: ClientId, tick: u64) -> Result<(), EngineError> {
        if !self.clients.contains(&client) {
            return Err(EngineError::UnknownClient(client));
        }
        if tick > self.now() {
            return Err(EngineError::FutureTick {
                event: tick,
                now: self.now(),
            });
        }
        Ok(())
    }

    pub fn handle(&mut self, ev: &CanonicalEvent) -> Result<Vec<OutputEvent>, EngineError> {
        self.check_event(ev.client, ev.tick)?;
        let mut out = Vec::new();
        match &ev.kind {
            CanonicalKind::HandMoved { hand, pose } => {
                self.scene.hands.insert(HandRef::new(ev.client, *hand), *pose);
            }
            CanonicalKind::GrabStart { object, hand } => {
                self.grab(HandRef::new(ev.client, *hand), object, &mut out)
            }
            CanonicalKind::Release { hand } => self.release(HandRef::new(ev.client, *hand), &mut out),
            CanonicalKind::Activate { object } => {
                if self.scene.get(object).is_none() {
                    warn(&mut out, format!("unknown object '{object}'"));
                } else if self.is_future_owned(object) {
                    warn(&mut out, future_msg(object));
                }
            }
            CanonicalKind::ToolActivate { hand } => {
                let held = self
                    .scene
                    .held_object(HandRef::new(ev.client, *hand))
                    .map(|o| o.id.clone());
                if let (Some(held), Some(Task::Tool { tool, .. })) = (held, self.current_task()) {
                    if self.program.asset(*tool).id == held {
                        self.progress.tool_latched = true;
                    }
                }
            }
            CanonicalKind::QuizSelect { choice } => self.quiz_select(*choice, &mut out),
            CanonicalKind::VoiceCommand { word } => out.push(OutputEvent::Notification {
                level: NotifyLevel::Info,
                text: format!("voice command '{word}' not recognized"),
            }),
        }
        Ok(out)
    }

    /// Advances the clock by `n` ticks.
    pub fn tick(&mut self, n: u64) -> Vec<OutputEvent> {
        let mut out = Vec::new();
        for _ in 0..n {
            self.step(&mut out);
        }
        out
    }

    fn step(&mut self, out: &mut Vec<OutputEvent>) {
        self.scene.tick += 1;
        let now = self.scene.tick;
        grab_step(&mut self.scene, &mut self.bindings, TICK_SECONDS);
        throw_step(&mut self.scene, &mut self.throws, TICK_SECONDS);
        self.constrain_ik();

        for obj in self.scene.objects.values_mut() {
            if obj.tint.as_ref().is_some_and(|t| t.expires_at <= now) {
                obj.tint = None;
            }
        }
        self.emit_due_narration(out);
        self.poll_active(out);
    }

    fn constrain_ik(&mut self) {
        for (id, chain) in self.ik.iter_mut() {
            let Some(obj) = self.scene.objects.get_mut(id) else {
                continue;
            };
            let sol = solve_two_bone_ik(chain, obj.pose.position);
            chain.angles = sol.angles;
            obj.pose.position = sol.end_effector;
        }
    }

    fn emit_due_narration(&mut self, out: &mut Vec<OutputEvent>) {
        let now = self.now();
        let (due, later): (Vec<_>, Vec<_>) = self.narration.drain(..).partition(|(t, _)| *t <= now);
        self.narration = later;
        for (tick, text) in due {
            out.push(OutputEvent::NarrationLine { text, tick });
        }
    }

    fn current_task(&self) -> Option<&Task> {
        self.program.actions.get(self.current).map(|a| &a.task)
    }

    fn asset_id(&self, idx: AssetIndex) -> &str {
        &self.program.asset(idx).id
    }

    fn is_future_owned(&self, object: &str) -> bool {
        self.owner.get(object).is_some_and(|&i| i > self.current)
    }

    fn poll_active(&mut self, out: &mut Vec<OutputEvent>) {
        let Some(task) = self.current_task().cloned() else {
            return;
        };
        let done = match task {
            Task::Remove {
                object,
                clearance_m,
            } => {
                let obj = &self.scene.objects[self.asset_id(object)];
                let d = obj.pose.position.distance(obj.initial_pose.position);
                self.progress.remove_displacement_m = d;
                d > clearance_m
            }
            Task::Tool {
                tool,
                region,
                required_active_s,
            } => {
                let obj = &self.scene.objects[self.asset_id(tool)];
                if self.progress.tool_latched && obj.held_by.is_some() && region.contains(obj.position()) {
                    self.progress.tool_active_ticks += 1;
                }
                let needed = (required_active_s / TICK_SECONDS - THRESHOLD_EPS).ceil().max(1.0) as u64;
                self.progress.tool_active_ticks >= needed
            }
            Task::Use {
                implement,
                region,
                required_sweep_m,
            } => {
                let obj = &self.scene.objects[self.asset_id(implement)];
                let pos = obj.position();
                if obj.held_by.is_some() {
                    if let Some(prev) = self.progress.last_sweep_pos {
                        self.progress.sweep_m =
                            sweep_accumulate(self.progress.sweep_m, prev, pos, &region);
                    }
                    self.progress.last_sweep_pos = Some(pos);
                } else {
                    self.progress.last_sweep_pos = None;
                }
                self.progress.sweep_m >= required_sweep_m - THRESHOLD_EPS
            }
            Task::Insert { .. } | Task::Quiz { .. } => false,
        };
        if done {
            self.complete_current(out);
        }
    }

    fn grab(&mut self, hand: HandRef, object: &str, out: &mut Vec<OutputEvent>) {
        let Some(obj) = self.scene.get(object) else {
            warn(out, format!("unknown object '{object}'"));
            return;
        };
        if !obj.has(Tag::Interactable) {
            return;
        }
        if self.is_future_owned(object) {
            warn(out, future_msg(object));
            return;
        }
        if self.locked.contains(object) {
            warn(out, format!("'{object}' is already in place"));
            return;
        }
        if self.bindings.iter().any(|b| b.hand == hand) {
            warn(out, "that hand is already holding an object".to_string());
            return;
        }
        let mode = self
            .program
            .asset_index(object)
            .map(|i| self.program.asset(i).grab_mode)
            .unwrap_or_default();
        match grab_attach(&mut self.scene, hand, object, mode) {
            Ok(binding) => {
                self.throws.retain(|t| t.object != object);
                self.bindings.push(binding);
                self.start_narration(object, out);
            }
            Err(GrabError::AlreadyHeld { .. }) => {
                warn(out, format!("'{object}' is held by someone else"));
            }
            Err(GrabError::NotInteractable(_) | GrabError::UnknownObject(_)) => {}
        }
    }

    fn start_narration(&mut self, object: &str, out: &mut Vec<OutputEvent>) {
        let Some(entry) = self.program.asset_index(object).map(|i| self.program.asset(i)) else {
            return;
        };
        if !entry.tags.contains(&Tag::StorytellerTrigger)
            || entry.narration.is_empty()
            || !self.narrated.insert(object.to_string())
        {
            return;
        }
        out.push(OutputEvent::NarrationStarted {
            asset: entry.narrator.clone(),
        });
        let now = self.now();
        for (delay, text) in &entry.narration {
            let due = now + (delay / TICK_SECONDS).round() as u64;
            self.narration.push((due, text.clone()));
        }
        // Stable sort keeps document order among lines due on the same tick.
        self.narration.sort_by_key(|(t, _)| *t);
        self.emit_due_narration(out);
    }

    fn release(&mut self, hand: HandRef, out: &mut Vec<OutputEvent>) {
        let Some((binding, throw)) = grab_release(&mut self.scene, &mut self.bindings, hand) else {
            return;
        };
        let object = binding.object;
        if let Some(Task::Tool { tool, .. }) = self.current_task() {
            if self.asset_id(*tool) == object {
                self.progress.tool_latched = false;
            }
        }
        if let Some(Task::Insert { object: target_obj, target, .. }) = self.current_task().cloned() {
            if self.asset_id(target_obj) == object {
                let pose = self.scene.objects[&object].pose;
                if check_insert(&pose, &target, &self.tolerance) {
                    let obj = self.scene.get_mut(&object).expect("scene object");
                    obj.pose = target;
                    self.progress.insert_latched = true;
                    let later_use = self.program.actions[self.current + 1..]
                        .iter()
                        .any(|a| a.task.subject() == Some(target_obj));
                    if !later_use {
                        self.locked.insert(object.clone());
                    }
                    self.complete_current(out);
                    return;
                }
                let near = pose.position.distance(target.position)
                    <= ERROR_REGION_FACTOR * self.tolerance.eps_pos;
                if near {
                    let expires_at = self.now() + TINT_TICKS;
                    let obj = self.scene.get_mut(&object).expect("scene object");
                    obj.tint = Some(Tint {
                        color: ERROR_TINT.to_string(),
                        expires_at,
                    });
                    out.push(OutputEvent::TintApplied {
                        object: object.clone(),
                        color: ERROR_TINT.to_string(),
                        duration_ticks: TINT_TICKS,
                    });
                    out.push(OutputEvent::Notification {
                        level: NotifyLevel::Error,
                        text: format!("'{object}' does not match its hologram"),
                    });
                }
            }
        }
        if let Some(t) = throw {
            self.throws.push(t);
        }
    }

    fn quiz_select(&mut self, choice: usize, out: &mut Vec<OutputEvent>) {
        let Some(Task::Quiz { choices, correct, .. }) = self.current_task() else {
            warn(out, "no question is open".to_string());
            return;
        };
        if choice >= choices.len() {
            warn(out, format!("choice {choice} does not exist"));
            return;
        }
        let is_correct = choice == *correct;
        out.push(OutputEvent::QuizFeedback {
            choice,
            correct: is_correct,
        });
        if is_correct {
            self.progress.quiz_answered = true;
            self.complete_current(out);
        }
    }

    fn complete_current(&mut self, out: &mut Vec<OutputEvent>) {
        let i = self.current;
        self.statuses[i] = ActionStatus::Completed;
        let path = self.program.actions[i].path.clone();
        self.completions.push((path.clone(), self.now()));
        out.push(OutputEvent::ActionCompleted { path });
        self.current += 1;
        if self.current < self.statuses.len() {
            self.activate(self.current, out);
        } else {
            out.push(OutputEvent::ScenarioCompleted);
        }
    }

    fn activate(&mut self, i: usize, out: &mut Vec<OutputEvent>) {
        self.statuses[i] = ActionStatus::Active;
        self.progress = ActionProgress::default();
        self.activation_payload(i, out);
    }

    fn activation_payload(&self, i: usize, out: &mut Vec<OutputEvent>) {
        match &self.program.actions[i].task {
            Task::Insert {
                target,
                hologram,
                aidline,
                ..
            } => {
                out.push(OutputEvent::HologramShown {
                    object: hologram.clone(),
                    target: *target,
                });
                if let Some(a) = aidline {
                    out.push(OutputEvent::AidlineShown {
                        text: a.text.clone(),
                        anchor: a.anchor,
                    });
                }
            }
            Task::Quiz {
                question, choices, ..
            } => out.push(OutputEvent::QuizPosed {
                question: question.clone(),
                choices: choices.iter().map(|c| c.label.clone()).collect(),
            }),
            Task::Remove { .. } | Task::Tool { .. } | Task::Use { .. } => {}
        }
    }
}

fn warn(out: &mut Vec<OutputEvent>, text: String) {
    out.push(OutputEvent::Notification {
        level: NotifyLevel::Warning,
        text,
    });
}

fn future_msg(object: &str) -> String {
    format!("'{object}' is needed in a later step")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::load_program;
    use crate::math::UnitQuat;

    const QUIZ_INSERT: &str = r#"scenario "t" {
  asset FlagGreece { pose = pose(-0.5, 1.5, 1, 0,1,0, 0) }
  asset FlagItaly { pose = pose(0, 1.5, 1, 0,1,0, 0) }
  asset Sponza { pose = pose(0, 1, 0, 0,1,0, 0) tags = ["interactable"] }
  asset Church { pose = pose(2, 1, 0, 0,1,0, 0) tags = ["interactable", "storyteller_trigger"]
    narration = [[0, "Welcome."], [0.5, "This church was built in 1250."]] narrator = "Priest" }
  asset Priest { pose = pose(3, 0, 0, 0,1,0, 0) }
  lesson L0 "l" { stage S0 "s" {
    action A0 quiz { question = "Where?" choices = [["Greece", "FlagGreece"], ["Italy", "FlagItaly"]] correct = 0 }
    action A1 insert { interactable = "Sponza" final = pose(1, 1, 0, 0,1,0, 90) hologram = "HoloSponza" aidline = "Place it" }
  } } }"#;

    fn engine(src: &str) -> (Engine, Vec<OutputEvent>) {
        let (program, _) = load_program(src).unwrap();
        let (mut e, out) = Engine::new(program, 7).unwrap();
        e.add_client(1);
        (e, out)
    }

    fn ev(e: &Engine, kind: CanonicalKind) -> CanonicalEvent {
        CanonicalEvent {
            tick: e.now(),
            client: 1,
            kind,
        }
    }

    fn send(e: &mut Engine, kind: CanonicalKind) -> Vec<OutputEvent> {
        let ev = ev(e, kind);
        e.handle(&ev).unwrap()
    }

    fn move_hand(e: &mut Engine, pose: Pose) {
        send(
            e,
            CanonicalKind::HandMoved {
                hand: Hand::Right,
                pose,
            },
        );
    }

    fn grab(e: &mut Engine, object: &str) -> Vec<OutputEvent> {
        send(
            e,
            CanonicalKind::GrabStart {
                object: object.into(),
                hand: Hand::Right,
            },
        )
    }

    fn release(e: &mut Engine) -> Vec<OutputEvent> {
        send(e, CanonicalKind::Release { hand: Hand::Right })
    }

    fn rot_y(deg: f64) -> UnitQuat {
        UnitQuat::from_axis_angle(Vec3::Y, deg.to_radians()).unwrap()
    }

    #[test]
    fn empty_program_rejected() {
        let (mut program, _) = load_program(QUIZ_INSERT).unwrap();
        program.actions.clear();
        assert_eq!(Engine::new(program, 0).unwrap_err(), EngineError::EmptyProgram);
    }

    #[test]
    fn quiz_first_has_no_hologram() {
        let (e, out) = engine(QUIZ_INSERT);
        assert!(!out.iter().any(|o| matches!(o, OutputEvent::HologramShown { .. })));
        assert!(matches!(&out[0], OutputEvent::QuizPosed { question, .. } if question == "Where?"));
        assert_eq!(e.active_quiz().unwrap().icons[1].as_deref(), Some("FlagItaly"));
    }

    #[test]
    fn wrong_then_right_answer() {
        let (mut e, _) = engine(QUIZ_INSERT);
        let out = send(&mut e, CanonicalKind::QuizSelect { choice: 1 });
        assert_eq!(out, vec![OutputEvent::QuizFeedback { choice: 1, correct: false }]);
        assert_eq!(e.current_action(), 0);
        let out = send(&mut e, CanonicalKind::QuizSelect { choice: 0 });
        assert_eq!(out[0], OutputEvent::QuizFeedback { choice: 0, correct: true });
        assert_eq!(out[1], OutputEvent::ActionCompleted { path: "L0/S0/A0".into() });
        assert!(matches!(&out[2], OutputEvent::HologramShown { object, .. } if object == "HoloSponza"));
        assert!(matches!(&out[3], OutputEvent::AidlineShown { text, .. } if text == "Place it"));
        assert_eq!(e.current_action(), 1);
        assert_eq!(e.statuses(), &[ActionStatus::Completed, ActionStatus::Active]);
    }

    #[test]
    fn future_object_warns_without_moving() {
        let (mut e, _) = engine(QUIZ_INSERT);
        move_hand(&mut e, Pose::from_position(Vec3::new(0.0, 1.0, 0.0)));
        let hash = e.state_hash();
        let out = grab(&mut e, "Sponza");
        assert!(matches!(&out[0], OutputEvent::Notification { level: NotifyLevel::Warning, .. }));
        e.tick(5);
        assert_eq!(e.state_hash(), hash);
        assert!(e.scene().get("Sponza").unwrap().held_by.is_none());
    }

    fn to_insert(e: &mut Engine) {
        send(e, CanonicalKind::QuizSelect { choice: 0 });
        move_hand(e, Pose::from_position(Vec3::new(0.0, 1.0, 0.0)));
        grab(e, "Sponza");
    }

    #[test]
    fn wrong_rotation_tints_and_keeps_action() {
        let (mut e, _) = engine(QUIZ_INSERT);
        to_insert(&mut e);
        move_hand(&mut e, Pose::new(Vec3::new(1.0, 1.0, 0.0), rot_y(60.0)));
        e.tick(60);
        let out = release(&mut e);
        assert_eq!(
            out[0],
            OutputEvent::TintApplied {
                object: "Sponza".into(),
                color: "red".into(),
                duration_ticks: 50
            }
        );
        assert!(matches!(&out[1], OutputEvent::Notification { level: NotifyLevel::Error, .. }));
        assert_eq!(e.current_action(), 1);
        let applied = e.now();
        e.tick(49);
        assert!(e.scene().get("Sponza").unwrap().tint.is_some());
        e.tick(1);
        assert_eq!(e.now(), applied + 50);
        assert!(e.scene().get("Sponza").unwrap().tint.is_none());
    }

    #[test]
    fn correct_insert_snaps_and_completes() {
        let (mut e, _) = engine(QUIZ_INSERT);
        to_insert(&mut e);
        move_hand(&mut e, Pose::new(Vec3::new(1.0, 1.0, 0.02), rot_y(85.0)));
        e.tick(60);
        let out = release(&mut e);
        assert_eq!(out[0], OutputEvent::ActionCompleted { path: "L0/S0/A1".into() });
        assert_eq!(out[1], OutputEvent::ScenarioCompleted);
        let pose = e.scene().get("Sponza").unwrap().pose;
        assert_eq!(pose.position, Vec3::new(1.0, 1.0, 0.0));
        assert!(e.is_complete());
        let out = grab(&mut e, "Sponza");
        assert!(matches!(&out[0], OutputEvent::Notification { level: NotifyLevel::Warning, .. }));
    }

    #[test]
    fn far_release_is_silent() {
        let (mut e, _) = engine(QUIZ_INSERT);
        to_insert(&mut e);
        move_hand(&mut e, Pose::new(Vec3::new(0.0, 1.0, 1.0), rot_y(60.0)));
        e.tick(60);
        assert!(release(&mut e).is_empty());
    }

    #[test]
    fn church_grab_starts_narration() {
        let (mut e, _) = engine(QUIZ_INSERT);
        move_hand(&mut e, Pose::from_position(Vec3::new(2.0, 1.0, 0.0)));
        e.tick(3);
        let out = grab(&mut e, "Church");
        assert_eq!(out[0], OutputEvent::NarrationStarted { asset: "Priest".into() });
        assert_eq!(out[1], OutputEvent::NarrationLine { text: "Welcome.".into(), tick: 3 });
        let later = e.tick(25);
        assert_eq!(
            later,
            vec![OutputEvent::NarrationLine {
                text: "This church was built in 1250.".into(),
                tick: 28
            }]
        );
        release(&mut e);
        assert!(!grab(&mut e, "Church").iter().any(|o| matches!(o, OutputEvent::NarrationStarted { .. })));
    }

    #[test]
    fn unknown_client_and_future_tick() {
        let (mut e, _) = engine(QUIZ_INSERT);
        let mut ev = ev(&e, CanonicalKind::QuizSelect { choice: 0 });
        ev.client = 9;
        assert_eq!(e.handle(&ev).unwrap_err(), EngineError::UnknownClient(9));
        ev.client = 1;
        ev.tick = 5;
        assert!(matches!(e.handle(&ev), Err(EngineError::FutureTick { .. })));
    }

    #[test]
    fn quiescent_hash() {
        let (mut e, _) = engine(QUIZ_INSERT);
        let h = e.state_hash();
        assert!(e.tick(1000).is_empty());
        assert_eq!(e.state_hash(), h);
    }

    const TOOLS: &str = r#"scenario "t" {
  asset Chisel { pose = pose(0, 0, 0, 0,1,0, 0) tags = ["interactable", "tool"] }
  asset Cloth { pose = pose(0, 0, 1, 0,1,0, 0) tags = ["interactable"] }
  asset Rubble { pose = pose(2, 0, 0, 0,1,0, 0) tags = ["interactable"] }
  lesson L "l" { stage S "s" {
    action T tool { tool = "Chisel" center = [1, 0, 0] radius = 0.2 duration = 0.1 }
    action U use { implement = "Cloth" center = [0, 0, 1] radius = 0.5 sweep = 0.3 }
    action R remove { target = "Rubble" clearance = 0.3 }
  } } }"#;

    #[test]
    fn tool_use_remove_sequence() {
        let (mut e, _) = engine(TOOLS);
        move_hand(&mut e, Pose::IDENTITY);
        grab(&mut e, "Chisel");
        move_hand(&mut e, Pose::from_position(Vec3::new(1.0, 0.0, 0.0)));
        e.tick(40);
        assert_eq!(e.progress().tool_active_ticks, 0);
        send(&mut e, CanonicalKind::ToolActivate { hand: Hand::Right });
        let out = e.tick(4);
        assert!(out.is_empty());
        let out = e.tick(1);
        assert_eq!(out, vec![OutputEvent::ActionCompleted { path: "L/S/T".into() }]);
        release(&mut e);

        move_hand(&mut e, Pose::from_position(Vec3::new(0.0, 0.0, 1.0)));
        grab(&mut e, "Cloth");
        let mut completed = false;
        for i in 0..40 {
            let x = if i % 2 == 0 { 0.1 } else { -0.1 };
            move_hand(&mut e, Pose::from_position(Vec3::new(x, 0.0, 1.0)));
            let out = e.tick(10);
            if out.contains(&OutputEvent::ActionCompleted { path: "L/S/U".into() }) {
                completed = true;
                break;
            }
        }
        assert!(completed);
        release(&mut e);

        move_hand(&mut e, Pose::from_position(Vec3::new(2.0, 0.0, 0.0)));
        grab(&mut e, "Rubble");
        move_hand(&mut e, Pose::from_position(Vec3::new(2.0, 0.5, 0.0)));
        let out = e.tick(30);
        assert!(out.contains(&OutputEvent::ScenarioCompleted));
        assert_eq!(
            e.completions().iter().map(|c| c.0.as_str()).collect::<Vec<_>>(),
            vec!["L/S/T", "L/S/U", "L/S/R"]
        );
    }

    #[test]
    fn ik_lamp_stays_on_reachable_sphere() {
        let src = r#"scenario "t" {
  asset Lamp { pose = pose(0, 1, 0, 0,1,0, 0) tags = ["interactable", "ik_chain"] ik = [0.3, 0.3] }
  asset X { pose = pose(0, 0, 0, 0,1,0, 0) tags = ["interactable"] }
  lesson L "l" { stage S "s" { action R remove { target = "X" } } } }"#;
        let (mut e, _) = engine(src);
        move_hand(&mut e, Pose::from_position(Vec3::new(0.0, 1.0, 0.0)));
        grab(&mut e, "Lamp");
        move_hand(&mut e, Pose::from_position(Vec3::new(2.0, 1.0, 0.0)));
        e.tick(100);
        let p = e.scene().get("Lamp").unwrap().position();
        assert!((p.distance(Vec3::new(0.0, 1.0, 0.0)) - 0.6).abs() < 1e-9);
    }
}
