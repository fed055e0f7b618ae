//! Server side of a session: owns the only engine, stamps inputs with its
//! clock and broadcasts outputs, keyframes and thresholded pose deltas.

use std::collections::BTreeMap;

use crate::dsl::RuntimeProgram;
use crate::eventlog::{EventLog, LogEntry, LogHeader, LogTrailer};
use crate::input::{DeviceProfile, RawEvent};
use crate::math::{rot_angle_between, Pose};
use crate::runtime::{ActionStatus, Engine, EngineError, NotifyLevel, OutputEvent};
use crate::scene::{ClientId, ObjectId};

use super::wire::{hash_hex, pose_to_dq, ActionEntry, ObjectSnapshot, Snapshot, WireMessage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub max_clients: usize,
    pub keyframe_interval: u64,
    pub hash_interval: u64,
    /// Meters.
    pub delta_pos: f64,
    /// Degrees.
    pub delta_rot_deg: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_clients: 8,
            keyframe_interval: 10,
            hash_interval: 250,
            delta_pos: 1e-3,
            delta_rot_deg: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outbound {
    /// Back to the peer whose message is being handled.
    Reply(WireMessage),
    To(ClientId, WireMessage),
    Broadcast(WireMessage),
}

#[derive(Debug, Clone)]
pub struct Session {
    name: String,
    engine: Engine,
    cfg: SessionConfig,
    clients: BTreeMap<ClientId, DeviceProfile>,
    next_client: ClientId,
    /// Pose last broadcast per object.
    last_sent: BTreeMap<ObjectId, Pose>,
    statuses: Vec<ActionStatus>,
    log: EventLog,
    /// Outputs produced while handling inputs, flushed on the next step.
    pending: Vec<(u64, OutputEvent)>,
    inbound: BTreeMap<ClientId, u64>,
}

impl Session {
    pub fn new(
        name: impl Into<String>,
        program: RuntimeProgram,
        seed: u64,
        cfg: SessionConfig,
    ) -> Result<Self, EngineError> {
        let name = name.into();
        let header = LogHeader {
            digest: program.digest.clone(),
            seed,
            scenario: name.clone(),
        };
        let (engine, initial) = Engine::new(program, seed)?;
        let last_sent = engine
            .scene()
            .objects
            .values()
            .map(|o| (o.id.clone(), o.pose))
            .collect();
        let statuses = engine.statuses().to_vec();
        Ok(Self {
            name,
            engine,
            cfg,
            clients: BTreeMap::new(),
            next_client: 1,
            last_sent,
            statuses,
            log: EventLog::new(header),
            pending: initial.into_iter().map(|o| (0, o)).collect(),
            inbound: BTreeMap::new(),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn clients(&self) -> &BTreeMap<ClientId, DeviceProfile> {
        &self.clients
    }

    /// Input messages accepted per client.
    pub fn inbound_counts(&self) -> &BTreeMap<ClientId, u64> {
        &self.inbound
    }

    pub fn now(&self) -> u64 {
        self.engine.now()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            tick: self.engine.now(),
            scenario: self.engine.program().name.clone(),
            objects: self
                .engine
                .scene()
                .objects
                .values()
                .map(ObjectSnapshot::from_object)
                .collect(),
            actions: self
                .engine
                .program()
                .actions
                .iter()
                .zip(self.engine.statuses())
                .map(|(a, s)| ActionEntry {
                    path: a.path.clone(),
                    status: *s,
                })
                .collect(),
            active: self.engine.activation_outputs(),
        }
    }

    /// Admits a client, or returns the refusal to send back.
    #[allow(clippy::result_large_err)]
    pub fn join(&mut self, profile: DeviceProfile) -> Result<(ClientId, WireMessage), WireMessage> {
        if self.clients.len() >= self.cfg.max_clients {
            return Err(WireMessage::Refuse {
                reason: format!("session is full ({} clients)", self.cfg.max_clients),
            });
        }
        let id = self.next_client;
        self.next_client += 1;
        self.clients.insert(id, profile.clone());
        self.engine.add_client(id);
        self.log.entries.push(LogEntry::Join {
            tick: self.engine.now(),
            client: id,
            profile,
        });
        let welcome = WireMessage::Welcome {
            client: id,
            digest: self.engine.program().digest.clone(),
            snapshot: self.snapshot(),
        };
        Ok((id, welcome))
    }

    pub fn leave(&mut self, client: ClientId) {
        if self.clients.remove(&client).is_none() {
            return;
        }
        let now = self.engine.now();
        let out = self.engine.remove_client(client);
        self.pending.extend(out.into_iter().map(|o| (now, o)));
        self.log.entries.push(LogEntry::Leave { tick: now, client });
    }

    /// Handles one message from a connected (or connecting) peer. `from` is
    /// `None` until the peer has been welcomed.
    pub fn receive(&mut self, from: Option<ClientId>, msg: WireMessage) -> (Option<ClientId>, Vec<Outbound>) {
        match (from, msg) {
            (None, WireMessage::Hello { device_profile, .. }) => match self.join(device_profile) {
                Ok((id, welcome)) => (Some(id), vec![Outbound::Reply(welcome)]),
                Err(refuse) => (None, vec![Outbound::Reply(refuse)]),
            },
            (Some(id), WireMessage::Input(ev)) => (Some(id), self.input(id, ev)),
            (Some(id), WireMessage::Bye) => {
                self.leave(id);
                (None, vec![])
            }
            (from, other) => {
                let reason = format!("unexpected '{}' message", other.tag());
                (from, vec![Outbound::Reply(WireMessage::Refuse { reason })])
            }
        }
    }

    /// Applies a client input at the current server tick.
    pub fn input(&mut self, client: ClientId, ev: RawEvent) -> Vec<Outbound> {
        let Some(profile) = self.clients.get(&client).cloned() else {
            return vec![];
        };
        *self.inbound.entry(client).or_default() += 1;
        let now = self.engine.now();
        let stamped = RawEvent {
            tick: now,
            client,
            raw: ev.raw,
        };
        self.log.entries.push(LogEntry::Event(stamped.clone()));
        match self.engine.handle_raw(&profile, &stamped) {
            Ok(out) => {
                self.pending.extend(out.into_iter().map(|o| (now, o)));
                vec![]
            }
            Err(e) => vec![Outbound::To(
                client,
                WireMessage::Output {
                    tick: now,
                    event: OutputEvent::Notification {
                        level: NotifyLevel::Error,
                        text: e.to_string(),
                    },
                },
            )],
        }
    }

    /// Advances the engine one tick and returns everything to broadcast.
    pub fn step(&mut self) -> Vec<Outbound> {
        let out = self.engine.tick(1);
        let tick = self.engine.now();
        self.pending.extend(out.into_iter().map(|o| (tick, o)));

        let mut msgs = Vec::new();
        for (t, event) in self.pending.drain(..) {
            msgs.push(Outbound::Broadcast(WireMessage::Output { tick: t, event }));
        }
        for (i, s) in self.engine.statuses().iter().enumerate() {
            if self.statuses[i] != *s {
                self.statuses[i] = *s;
                msgs.push(Outbound::Broadcast(WireMessage::ActionState {
                    path: self.engine.program().actions[i].path.clone(),
                    status: *s,
                }));
            }
        }

        let scene = self.engine.scene();
        if tick.is_multiple_of(self.cfg.keyframe_interval) {
            let poses = scene
                .objects
                .values()
                .map(|o| (o.id.clone(), pose_to_dq(&o.pose)))
                .collect();
            for o in scene.objects.values() {
                self.last_sent.insert(o.id.clone(), o.pose);
            }
            msgs.push(Outbound::Broadcast(WireMessage::Keyframe { tick, poses }));
        } else {
            for o in scene.objects.values() {
                let moved = match self.last_sent.get(&o.id) {
                    Some(prev) => {
                        prev.position.distance(o.pose.position) > self.cfg.delta_pos
                            || rot_angle_between(prev.rotation, o.pose.rotation) > self.cfg.delta_rot_deg
                    }
                    None => true,
                };
                if moved {
                    self.last_sent.insert(o.id.clone(), o.pose);
                    msgs.push(Outbound::Broadcast(WireMessage::PoseDelta {
                        id: o.id.clone(),
                        dq: pose_to_dq(&o.pose),
                        tick,
                    }));
                }
            }
        }
        if tick.is_multiple_of(self.cfg.hash_interval) {
            msgs.push(Outbound::Broadcast(WireMessage::StateHash {
                tick,
                hash: hash_hex(self.engine.state_hash()),
            }));
        }
        msgs
    }

    /// The recorded log, closed with the current hash.
    pub fn finish_log(&self) -> EventLog {
        let mut log = self.log.clone();
        log.trailer = Some(LogTrailer {
            final_hash: hash_hex(self.engine.state_hash()),
            total_ticks: self.engine.now(),
        });
        log
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}
